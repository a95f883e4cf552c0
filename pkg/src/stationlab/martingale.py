"""Gordin's approximating martingale and the four approximation functionals.

The increment D_N = sum_{k=0}^N P_0(X_k) is always reported together with a
Cauchy diagnostic ||D_{2N'} - D_{N'}||_2 over a dyadic truncation grid: for
linear and semi-linear models the projections are closed-form, so D_N is a
function of a single coordinate and both the error functionals and its norm
are exact window computations.

Functional labels: MA (mean-square, annealed), MMA (maximal), MA0 / MMA0
(quenched, i.e. conditioned on a pinned past). Quenched estimates are formed
by pinning omega_{<=0} and averaging over futures. ``remove_drift`` subtracts
the exact conditional drift E(S_k|F_0) from the deviation before squaring;
with the drift removed the quenched functional is independent of the pinned
past for semi-linear models, which is the reduction the quenched theory
rests on. The drift itself is a separate, exactly computable quantity (see
``models.max_conditional_drift``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .models import (
    CausalLinearModel,
    HolderModel,
    ModelError,
    PastConfig,
    SemiLinearModel,
    _future_weights,
    _past_weights,
)
from .sequences import CONVERGES, DIVERGES
from . import simulate
from .simulate import PURPOSE_PATH, PURPOSE_QUENCHED

__all__ = [
    "MartingaleApproximant",
    "ApproximationEntry",
    "gordin_increment",
    "limit_increment",
    "ma_error_exact",
    "ma_error_mc",
    "criterion3_statistic",
    "criterion3_grid",
    "cpcond_statistic",
]


@dataclass(frozen=True)
class MartingaleApproximant:
    """A truncated Gordin increment D_N = sum_{k<=N} P_0(X_k).

    ``limit_exists`` reports whether the untruncated series has a certified
    L2 limit (None when the coefficient tail model cannot certify either
    way); ``cauchy`` holds (N', ||D_{2N'} - D_{N'}||_2) diagnostics.
    """

    model_id: str
    kind: str  # "linear_scalar" | "semilinear_function"
    truncation: int
    norm2: float
    coefficient: float = 0.0
    d_values: tuple[float, ...] | None = None
    limit_exists: bool | None = None
    cauchy: tuple[tuple[int, float], ...] = ()


def _dyadic_truncations(n_max: int):
    out = []
    t = 1
    while t <= n_max:
        out.append(t)
        t *= 2
    return out


def _linear_limit_flag(model: CausalLinearModel) -> bool | None:
    cls = model.coeffs.tail.classify_weighted(0.0, 1.0)
    if cls == CONVERGES:
        return True
    if cls == DIVERGES:
        # |a| summable fails; for nonnegative coefficients that rules the
        # limit out, for signed ones it is inconclusive.
        all_nonneg = model.coeffs.nonnegative and not any(v < 0 for v in model.coeffs.prefix)
        return False if all_nonneg else None
    return None


def gordin_increment(model, truncation: int) -> MartingaleApproximant:
    """D_N = sum_{k=0}^N P_0(X_k) with its norm and Cauchy diagnostics.

    For linear models D_N = (sum_{k<=N} a_k) eps_0; for discrete semi-linear
    models it is the per-atom lag-window sum. Divergence of the untruncated
    coefficient sum is flagged via ``limit_exists`` rather than raised: the
    truncated increment is always well defined.
    """
    if truncation < 0:
        raise ModelError("truncation must be >= 0")
    if isinstance(model, CausalLinearModel):
        rms = math.sqrt(model.innovation.second_moment)
        c = float(model.coeff_prefix(min(truncation, model.lag)))
        cauchy = tuple(
            (
                t,
                abs(
                    float(model.coeff_prefix(min(2 * t, model.lag)))
                    - float(model.coeff_prefix(min(t, model.lag)))
                )
                * rms,
            )
            for t in _dyadic_truncations(truncation)
        )
        return MartingaleApproximant(
            model_id=model.model_id,
            kind="linear_scalar",
            truncation=truncation,
            norm2=abs(c) * rms,
            coefficient=c,
            limit_exists=_linear_limit_flag(model),
            cauchy=cauchy,
        )
    if isinstance(model, SemiLinearModel):
        model._require_exact("gordin_increment")
        d = model.cum_window(min(truncation, model.lag))
        cauchy = []
        for t in _dyadic_truncations(truncation):
            diff = model.cum_window(min(2 * t, model.lag)) - model.cum_window(min(t, model.lag))
            cauchy.append((t, math.sqrt(model.weight(diff))))
        norm_cls = model.projection_norms().tail.classify_weighted(0.0, 1.0)
        limit = True if norm_cls == CONVERGES else (False if norm_cls == DIVERGES else None)
        return MartingaleApproximant(
            model_id=model.model_id,
            kind="semilinear_function",
            truncation=truncation,
            norm2=math.sqrt(model.weight(d)),
            d_values=tuple(d.tolist()),
            limit_exists=limit,
            cauchy=tuple(cauchy),
        )
    raise ModelError("gordin_increment needs closed-form projections (linear or semi-linear)")


def limit_increment(model) -> MartingaleApproximant:
    """The full truncated-model increment D = sum_{k<=L} P_0(X_k)."""
    return gordin_increment(model, model.lag)


@dataclass(frozen=True)
class GordinNormEstimate:
    """Monte Carlo estimate of ||D_N||_2^2 for models without exact projections."""

    truncation: int
    norm2sq: float
    norm2sq_se: float
    replicates: int

    @property
    def norm2(self) -> float:
        return math.sqrt(max(self.norm2sq, 0.0))


def estimate_gordin_norm2(
    model: HolderModel, truncation: int | None = None, replicates: int = 1 << 15, master_seed: int = 11
) -> GordinNormEstimate:
    """Unbiased estimate of ||D_N||_2^2 for a Holder model.

    Per sampled past, D_N(omega) = sum_{k<=N} P_0(X_k)(omega) is drawn twice
    with independent integration coordinates (common-random-number
    differencing inside each draw); the cross product is unbiased for
    D_N(omega)^2, so its mean over pasts estimates the squared norm without
    the inner-variance inflation of a plug-in estimator.
    """
    from .simulate import make_rng

    if not isinstance(model, HolderModel):
        raise ModelError("estimate_gordin_norm2 is for Holder models")
    base = model.base
    space = model.space
    L = base.lag
    N = min(truncation if truncation is not None else L, L)
    rng = make_rng(master_seed, purpose=simulate.PURPOSE_PROJECTION, past_id=(1 << 20))
    r = replicates
    if space.is_discrete:
        omega0 = space.draw_indices(rng, r)
        deep = space.draw_indices(rng, (r, L))  # deep[:, v-1] = omega_{-v}
    else:
        omega0 = space.draw(rng, r)
        deep = space.draw(rng, (r, L))

    def one_draw() -> np.ndarray:
        d = np.zeros(r)
        for k in range(N + 1):
            tail = np.zeros(r)
            for j in range(k + 1, L + 1):
                tail += base.alpha_values(j, deep[:, j - k - 1])
            if space.is_discrete:
                fresh = space.draw_indices(rng, (r, k + 1))
            else:
                fresh = space.draw(rng, (r, k + 1))
            u = np.zeros(r)
            for j in range(k):
                u += base.alpha_values(j, fresh[:, j])
            y1 = u + base.alpha_values(k, omega0) + tail
            y2 = u + base.alpha_values(k, fresh[:, k]) + tail
            d += model.f(y1) - model.f(y2)
        return d

    prod = one_draw() * one_draw()
    return GordinNormEstimate(
        truncation=N,
        norm2sq=float(np.mean(prod)),
        norm2sq_se=float(np.std(prod, ddof=1) / math.sqrt(r)),
        replicates=r,
    )


# ---------------------------------------------------------------------------
# Exact error functional
# ---------------------------------------------------------------------------


def _increment_shift(model, approximant: MartingaleApproximant):
    if isinstance(model, CausalLinearModel):
        if approximant.kind != "linear_scalar":
            raise ModelError("approximant does not match the model family")
        return approximant.coefficient
    if approximant.kind != "semilinear_function":
        raise ModelError("approximant does not match the model family")
    return np.asarray(approximant.d_values, dtype=float)


def ma_error_exact(model, approximant: MartingaleApproximant, n: int) -> float:
    """Exact n^{-1} || S_n - sum_{k<=n} D o T^k ||_2^2.

    Coordinate decomposition: the deviation is sum_m h_{n,m}(omega_m) with
    h = g - D on the future windows and h = g on the past ones, so the value
    is a window-weight sum, O(L) per horizon.
    """
    if n < 1:
        raise ModelError("horizon must be >= 1")
    if isinstance(model, HolderModel):
        raise ModelError("no exact functional for Holder models; see wip_sup_test")
    shift = _increment_shift(model, approximant)
    return (_future_weights(model, n, shift=shift) + _past_weights(model, n)) / n


# ---------------------------------------------------------------------------
# Monte Carlo error functionals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ApproximationEntry:
    """One row of an approximation report."""

    model_id: str
    functional: str  # MA | MMA | MA0 | MMA0
    n: int
    value: float
    se: float
    method: str  # exact_oracle | monte_carlo
    past_id: int | None
    truncation: int

    def csv_row(self):
        return (
            self.model_id,
            self.functional,
            self.n,
            self.value,
            self.se,
            self.method,
            "" if self.past_id is None else self.past_id,
            self.truncation,
        )


def exact_entry(model, approximant: MartingaleApproximant, n: int) -> ApproximationEntry:
    return ApproximationEntry(
        model.model_id,
        "MA",
        n,
        ma_error_exact(model, approximant, n),
        0.0,
        "exact_oracle",
        None,
        approximant.truncation,
    )


def ma_error_mc(
    model,
    approximant: MartingaleApproximant,
    n: int,
    count: int,
    master_seed: int,
    maximal: bool = False,
    past: PastConfig | None = None,
    remove_drift: bool = False,
    workers: int = 1,
) -> ApproximationEntry:
    """Monte Carlo estimate of the chosen approximation functional.

    maximal=False: n^{-1} (S_n - M_n)^2 averaged over replicates.
    maximal=True:  n^{-1} max_{k<=n} (S_k - M_k)^2.
    past pins omega_{<=0}; the conditional expectation is realised as the
    average over futures. remove_drift subtracts the exact E(S_k|F_0) path
    computed from each replicate's own past coordinates.
    """
    if count < 1:
        raise ModelError("need at least one replicate")
    if isinstance(model, HolderModel):
        raise ModelError(
            "ma_error_mc needs closed-form martingale increments; Holder models "
            "are covered by wip_sup_test and the projection-bound diagnostics"
        )
    purpose = PURPOSE_QUENCHED if past is not None else PURPOSE_PATH
    chunk = max(1, min(count, simulate._CHUNK_ELEMS // (n + model.lag + 1)))
    values = np.empty(count)

    def run(lo: int, hi: int) -> None:
        reps = np.arange(lo, hi)
        coords = simulate.chunk_coords(model, n, master_seed, reps, past, purpose)
        x = simulate.x_path_matrix(model, coords)
        np.cumsum(x, axis=1, out=x)
        m = simulate.martingale_increment_matrix(model, approximant, coords)
        np.cumsum(m, axis=1, out=m)
        if maximal:
            dev = x - m
            if remove_drift:
                dev -= simulate.drift_matrix(model, n, coords, full=True)
            values[lo:hi] = np.max(dev * dev, axis=1) / n
        else:
            dev = x[:, -1] - m[:, -1]
            if remove_drift:
                dev = dev - simulate.drift_matrix(model, n, coords, full=False)
            values[lo:hi] = dev * dev / n

    ranges = list(simulate._chunk_ranges(count, chunk))
    if workers > 1 and len(ranges) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda r: run(*r), ranges))
    else:
        for lo, hi in ranges:
            run(lo, hi)

    functional = ("MMA" if maximal else "MA") + ("0" if past is not None else "")
    return ApproximationEntry(
        model_id=model.model_id,
        functional=functional,
        n=n,
        value=float(np.mean(values)),
        se=float(np.std(values, ddof=1) / math.sqrt(count)),
        method="monte_carlo",
        past_id=past.past_id if past is not None else None,
        truncation=approximant.truncation,
    )


# ---------------------------------------------------------------------------
# Convergence criteria statistics
# ---------------------------------------------------------------------------


def _pair_sums(model, start: int) -> np.ndarray:
    """gamma_start(i) = sum_{j>=start} <alpha_j, alpha_{j+i}> for i = 0..L-start."""
    L = model.lag
    if start > L:
        return np.zeros(1)
    if isinstance(model, CausalLinearModel):
        a = model.a
        return np.array(
            [model.sigma2 * float(np.dot(a[start : L + 1 - i], a[start + i : L + 1])) for i in range(L - start + 1)]
        )
    A = model.alpha
    p = model.space.probs_array()
    out = np.empty(L - start + 1)
    for i in range(L - start + 1):
        out[i] = float(np.einsum("jm,jm,m->", A[start : L + 1 - i], A[start + i : L + 1], p))
    return out


def criterion3_statistic(model, depth: int, n: int) -> float:
    """n^{-1} sum_{k=1}^n E(X_0 E(S_{k-1} | F_{-depth})), exactly.

    The covariance algebra reduces it to gamma_depth(i) = sum_{j>=depth}
    <alpha_j, alpha_{j+i}>: coordinates older than -depth pair lag j with lag
    j+i. The statistic is (1/n) sum_{i>=1} (n-i) gamma_depth(i).
    """
    if depth < 1 or n < 1:
        raise ModelError("depth and horizon must be >= 1")
    if isinstance(model, HolderModel):
        raise ModelError("criterion3_statistic needs an exact model")
    if isinstance(model, SemiLinearModel):
        model._require_exact("criterion3_statistic")
    gamma = _pair_sums(model, depth)
    i_max = min(n - 1, len(gamma) - 1)
    if i_max < 1:
        return 0.0
    i = np.arange(1, i_max + 1, dtype=float)
    return float(np.dot(n - i, gamma[1 : i_max + 1])) / n


def criterion3_grid(model, depths: Sequence[int], horizons: Sequence[int]) -> np.ndarray:
    """Matrix of criterion3_statistic over (depth, horizon) pairs."""
    out = np.empty((len(depths), len(horizons)))
    for a, N in enumerate(depths):
        for b, n in enumerate(horizons):
            out[a, b] = criterion3_statistic(model, N, n)
    return out


def cpcond_statistic(model, start: int) -> float:
    """E sup_{k>=start} | sum_{i>=k} P_0(X_i) |^2, exactly for exact models.

    Linear: the tails are deterministic multiples of eps_0, so the value is
    sigma_eps^2 (sup_k |tail_k|)^2. Semi-linear: the sup runs pointwise over
    the atoms before taking the expectation. Divergent coefficient sums give
    an infinite statistic (flagged as inf, not raised).
    """
    if start < 0:
        raise ModelError("start index must be >= 0")
    if isinstance(model, CausalLinearModel):
        if _linear_limit_flag(model) is False:
            return math.inf
        L = model.lag
        top = float(model.coeff_prefix(L))
        ks = np.arange(min(start, L + 1), L + 2)
        tails = top - model.cum[ks]
        sup = float(np.max(np.abs(tails))) if len(tails) else 0.0
        if start > L:
            sup = 0.0
        return model.innovation.second_moment * sup * sup
    if isinstance(model, SemiLinearModel):
        model._require_exact("cpcond_statistic")
        L = model.lag
        top = model.cum[L + 1]
        ks = np.arange(min(start, L + 1), L + 2)
        tails = top[None, :] - model.cum[ks]  # (k, atom)
        sup = np.max(np.abs(tails), axis=0) if len(ks) else np.zeros_like(top)
        if start > L:
            sup = np.zeros_like(top)
        return float(np.dot(model.space.probs_array(), sup * sup))
    raise ModelError("cpcond_statistic needs closed-form projections")
