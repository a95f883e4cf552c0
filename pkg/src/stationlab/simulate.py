"""Reproducible path generation with counter-based per-replicate streams.

Every replicate r of a batch owns the Philox stream keyed by
(master_seed ^ purpose<<56, past_id<<32 | r), so results are a pure function
of (model, n, R, master_seed, past) and never depend on chunking or worker
count. Accumulated statistics are written into per-replicate slots and
reduced in index order, which keeps the merge associative in exact
arithmetic.

Paths are streamed in chunks: only terminal statistics (S_n, running max,
maximal martingale deviation) are retained unless a caller explicitly asks
for trajectories.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .models import (
    CausalLinearModel,
    HolderModel,
    ModelError,
    PastConfig,
    SemiLinearModel,
)

__all__ = [
    "PURPOSE_PATH",
    "PURPOSE_PAST",
    "PURPOSE_QUENCHED",
    "make_rng",
    "stream_key",
    "PartialSumTrajectory",
    "ReplicateBatch",
    "sample_path",
    "replicate_batch",
    "x_path_matrix",
]

PURPOSE_PATH = 1
PURPOSE_PAST = 2
PURPOSE_CENTERING = 3
PURPOSE_PROJECTION = 4
PURPOSE_QUENCHED = 5

_MASK64 = (1 << 64) - 1


def stream_key(master_seed: int, purpose: int = 0, past_id: int = 0, replicate: int = 0):
    """The two 64-bit Philox key words for one logical stream."""
    w0 = (int(master_seed) ^ (int(purpose) << 56)) & _MASK64
    w1 = ((int(past_id) << 32) | (int(replicate) & 0xFFFFFFFF)) & _MASK64
    return w0, w1


def make_rng(
    master_seed: int, purpose: int = 0, past_id: int = 0, replicate: int = 0
) -> np.random.Generator:
    w0, w1 = stream_key(master_seed, purpose, past_id, replicate)
    key = np.array([w0, w1], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


# ---------------------------------------------------------------------------
# Coordinate draws
# ---------------------------------------------------------------------------


class _Coords:
    """Coordinate matrix for a chunk of replicates.

    Column t+L-1 holds omega_t for t = 1-L .. n; a pinned past fills the
    first L columns identically across rows.
    """

    __slots__ = ("indices", "_values", "points", "n", "lag")

    def __init__(self, n, lag, indices=None, values=None, points=None):
        self.n = n
        self.lag = lag
        self.indices = indices
        self._values = values
        self.points = points

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            self._values = self.points[self.indices]
        return self._values


def _model_space(model):
    return model.innovation if isinstance(model, CausalLinearModel) else model.space


def _base_semilinear(model):
    return model.base if isinstance(model, HolderModel) else model


def _guard_sizes(model, n: int) -> None:
    if n < 1:
        raise ModelError("horizon must be >= 1")
    if (n + model.lag + 1) > (1 << 34):
        raise ModelError(f"horizon {n} with lag {model.lag} exceeds the stream-length guard")


def chunk_coords(
    model,
    n: int,
    master_seed: int,
    replicates: np.ndarray,
    past: PastConfig | None = None,
    purpose: int = PURPOSE_PATH,
) -> _Coords:
    """Draw (or pin) omega_{1-L..n} for each replicate in the chunk."""
    _guard_sizes(model, n)
    space = _model_space(model)
    L = model.lag
    r = len(replicates)
    width = n + L
    draw_cols = n if past is not None else width
    if past is not None and past.depth < L:
        raise ModelError(f"pinned past needs depth >= {L}, got {past.depth}")
    past_id = past.past_id if past is not None else 0
    if space.is_discrete:
        idx = np.empty((r, width), dtype=np.int64)
        if past is not None and L > 0:
            idx[:, :L] = past.indices_array()[:L][::-1]
        for i, rep in enumerate(replicates):
            rng = make_rng(master_seed, purpose, past_id, int(rep))
            idx[i, width - draw_cols :] = space.draw_indices(rng, draw_cols)
        return _Coords(n, L, indices=idx, points=space.points_array())
    vals = np.empty((r, width))
    if past is not None and L > 0:
        vals[:, :L] = past.values_array()[:L][::-1]
    for i, rep in enumerate(replicates):
        rng = make_rng(master_seed, purpose, past_id, int(rep))
        vals[i, width - draw_cols :] = space.draw(rng, draw_cols)
    return _Coords(n, L, values=vals)


# ---------------------------------------------------------------------------
# Path transforms
# ---------------------------------------------------------------------------

def x_path_matrix(model, coords: _Coords, method: str = "auto") -> np.ndarray:
    """Increments X_1..X_n for every replicate row of the chunk.

    Linear models convolve in one of three ways: "direct" (the naive O(nL)
    accumulation, kept as the reference), "blas" (sliding-window matmul,
    default for short kernels), "fft" (block convolution, default for long
    kernels). All agree to floating-point noise and each is a pure per-row
    transform, so chunking and worker count never affect values.
    """
    n, L = coords.n, coords.lag
    if isinstance(model, CausalLinearModel):
        v = coords.values
        if method == "auto":
            method = "blas" if L + 1 <= 128 else "fft"
        if method == "fft":
            return signal.fftconvolve(v, model.a[None, :], mode="valid", axes=1)
        if method == "blas":
            windows = np.lib.stride_tricks.sliding_window_view(v, L + 1, axis=1)
            return windows @ model.a[::-1].copy()
        out = model.a[0] * v[:, L : L + n]
        for j in range(1, L + 1):
            out += model.a[j] * v[:, L - j : L - j + n]
        return out
    if isinstance(model, HolderModel):
        y = x_path_matrix(model.base, coords)
        return model.f(y) - model.centering
    # semi-linear: per-lag atom gathers (exact arithmetic)
    sl: SemiLinearModel = model
    if sl.space.is_discrete:
        idx = coords.indices
        out = sl.alpha[0][idx[:, L : L + n]].astype(float, copy=True)
        for j in range(1, L + 1):
            out += sl.alpha[j][idx[:, L - j : L - j + n]]
        return out
    v = coords.values
    out = np.asarray(sl.alpha_fns[0](v[:, L : L + n]), dtype=float).copy()
    for j in range(1, L + 1):
        out += np.asarray(sl.alpha_fns[j](v[:, L - j : L - j + n]), dtype=float)
    return out


def martingale_increment_matrix(model, approximant, coords: _Coords) -> np.ndarray:
    """Values D o T^k for k = 1..n per replicate (D a function of omega_k)."""
    n, L = coords.n, coords.lag
    if approximant.kind == "linear_scalar":
        return approximant.coefficient * coords.values[:, L : L + n]
    if approximant.kind == "semilinear_function":
        d = np.asarray(approximant.d_values, dtype=float)
        return d[coords.indices[:, L : L + n]]
    raise ModelError(f"cannot evaluate martingale increments of kind {approximant.kind!r}")


def drift_matrix(model, n: int, coords: _Coords, full: bool) -> np.ndarray:
    """Exact E(S_k|F_0) per replicate from its own first-L coordinates.

    Returns shape (r, n) when ``full`` else the terminal column (r,). The
    path is constant for k > L.
    """
    from .models import _drift_coefficients  # shared coefficient machinery

    L = model.lag
    K = min(n, L + 1)
    ks = np.arange(1, K + 1) if full else np.array([n])
    C = _drift_coefficients(model, ks)
    if isinstance(model, CausalLinearModel):
        past_vals = coords.values[:, :L][:, ::-1] if L > 0 else np.zeros((coords.values.shape[0], 0))
        paths = past_vals @ C[:, :L].T  # (r, K)
    else:
        idx = coords.indices[:, :L][:, ::-1] if L > 0 else None
        r = coords.indices.shape[0]
        paths = np.zeros((r, C.shape[0]))
        for u in range(L):
            paths += C[:, u, :][:, idx[:, u]].T
    if not full:
        return paths[:, 0]
    if n > paths.shape[1]:
        pad = np.repeat(paths[:, -1:], n - paths.shape[1], axis=1)
        paths = np.concatenate([paths, pad], axis=1)
    return paths


# ---------------------------------------------------------------------------
# Trajectories and batches
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PartialSumTrajectory:
    """One realised path: increments, partial sums, and running maxima."""

    increments: np.ndarray
    sums: np.ndarray
    seed: int
    replicate: int

    @property
    def n(self) -> int:
        return len(self.sums)

    @property
    def running_max(self) -> np.ndarray:
        return np.maximum.accumulate(self.sums)

    def polygonal_sup(self) -> float:
        """sup_t of the polygonal interpolation on [0,1]: max(0, max_k S_k)."""
        return max(0.0, float(np.max(self.sums)))


def sample_path(
    model,
    n: int,
    stream: tuple[int, int],
    past: PastConfig | None = None,
    method: str = "auto",
) -> PartialSumTrajectory:
    """One trajectory (S_1..S_n) on the stream (master_seed, replicate)."""
    master_seed, replicate = stream
    purpose = PURPOSE_QUENCHED if past is not None else PURPOSE_PATH
    coords = chunk_coords(model, n, master_seed, np.array([replicate]), past, purpose)
    x = x_path_matrix(model, coords, method=method)[0]
    return PartialSumTrajectory(x, np.cumsum(x), int(master_seed), int(replicate))


@dataclass
class ReplicateBatch:
    """Terminal statistics of R independent replicates of one experiment."""

    model_id: str
    n: int
    count: int
    master_seed: int
    s_n: np.ndarray
    max_s: np.ndarray
    max_absdev: np.ndarray | None
    past_id: int | None = None

    def csv_rows(self):
        rows = []
        purpose = PURPOSE_PATH if self.past_id is None else PURPOSE_QUENCHED
        for r in range(self.count):
            hi, lo = stream_key(self.master_seed, purpose, self.past_id or 0, r)
            dev = self.max_absdev[r] if self.max_absdev is not None else float("nan")
            rows.append(
                (self.model_id, self.n, r, self.s_n[r], self.max_s[r], dev, hi, lo)
            )
        return rows


_CHUNK_ELEMS = 1 << 23  # ~64 MiB of float64 coordinates per in-flight chunk


def _chunk_ranges(total: int, chunk: int):
    lo = 0
    while lo < total:
        hi = min(lo + chunk, total)
        yield lo, hi
        lo = hi


def replicate_batch(
    model,
    n: int,
    count: int,
    master_seed: int,
    past: PastConfig | None = None,
    martingale=None,
    workers: int = 1,
    method: str = "auto",
) -> ReplicateBatch:
    """Run ``count`` replicates and collect (S_n, max_k S_k, max_k |S_k - M_k|).

    Deterministic in (model, n, count, master_seed, past) for every worker
    count and chunking; the deviation column requires ``martingale``.
    """
    if count < 1:
        raise ModelError("replicate count must be >= 1")
    _guard_sizes(model, n)
    if martingale is not None and isinstance(model, HolderModel):
        raise ModelError("martingale deviation paths are unsupported for Holder models")
    s_n = np.empty(count)
    max_s = np.empty(count)
    max_absdev = np.empty(count) if martingale is not None else None
    purpose = PURPOSE_QUENCHED if past is not None else PURPOSE_PATH
    chunk = max(1, min(count, _CHUNK_ELEMS // (n + model.lag + 1)))

    def run(lo: int, hi: int) -> None:
        reps = np.arange(lo, hi)
        coords = chunk_coords(model, n, master_seed, reps, past, purpose)
        x = x_path_matrix(model, coords, method=method)
        np.cumsum(x, axis=1, out=x)  # x now holds the partial sums
        s_n[lo:hi] = x[:, -1]
        max_s[lo:hi] = np.max(x, axis=1)
        if martingale is not None:
            m = martingale_increment_matrix(model, martingale, coords)
            np.cumsum(m, axis=1, out=m)
            np.subtract(x, m, out=x)
            np.abs(x, out=x)
            max_absdev[lo:hi] = np.max(x, axis=1)

    ranges = list(_chunk_ranges(count, chunk))
    if workers > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda r: run(*r), ranges))
    else:
        for lo, hi in ranges:
            run(lo, hi)
    return ReplicateBatch(
        model_id=model.model_id,
        n=n,
        count=count,
        master_seed=int(master_seed),
        s_n=s_n,
        max_s=max_s,
        max_absdev=max_absdev,
        past_id=past.past_id if past is not None else None,
    )


def _terminal_weights(model, n: int):
    """Per-coordinate window sums w with S_n = sum_i w_i(omega at column i).

    Column i holds the coordinate at time t = i + 1 - L; its weight is the
    coefficient window over lags j in [max(1,t), n] - t.
    """
    L = model.lag
    t = np.arange(n + L) + 1 - L
    hi = np.minimum(L, n - t)
    lo = np.where(t <= 0, -t, -1)
    if isinstance(model, CausalLinearModel):
        return model.coeff_prefix(hi) - model.coeff_prefix(lo)
    return model.cum_window(hi) - model.cum_window(lo)


def terminal_sums(
    model,
    n: int,
    count: int,
    master_seed: int,
    past: PastConfig | None = None,
    workers: int = 1,
) -> np.ndarray:
    """S_n per replicate without retaining paths (the CLT-test fast path).

    Same streams and values (up to summation order) as ``replicate_batch``:
    S_n collapses to one weighted sum over the coordinate columns.
    """
    if isinstance(model, HolderModel):
        return replicate_batch(model, n, count, master_seed, past=past, workers=workers).s_n
    _guard_sizes(model, n)
    purpose = PURPOSE_QUENCHED if past is not None else PURPOSE_PATH
    w = _terminal_weights(model, n)
    out = np.empty(count)
    chunk = max(1, min(count, _CHUNK_ELEMS // (n + model.lag + 1)))

    def run(lo: int, hi: int) -> None:
        reps = np.arange(lo, hi)
        coords = chunk_coords(model, n, master_seed, reps, past, purpose)
        if isinstance(model, CausalLinearModel):
            out[lo:hi] = coords.values @ w
        else:
            m = len(model.space.points)
            flat = coords.indices + m * np.arange(coords.indices.shape[1])[None, :]
            out[lo:hi] = w.ravel()[flat].sum(axis=1)

    ranges = list(_chunk_ranges(count, chunk))
    if workers > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda r: run(*r), ranges))
    else:
        for lo, hi in ranges:
            run(lo, hi)
    return out
