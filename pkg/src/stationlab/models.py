"""Process families over iid coordinates and their exact second-order oracles.

Three families share one filtration picture: coordinates (omega_j) are iid
draws from an innovation space, F_k is generated by omega_j for j <= k, and

* ``CausalLinearModel``     X_k = sum_j a_j eps_{k-j},
* ``SemiLinearModel``       X_k = sum_j alpha_j(omega_{k-j}) with centered
  square-integrable functions alpha_j,
* ``HolderModel``           X_k = f(Y_k) - E f(Y_k) for a Holder function f of
  a semi-linear Y.

Infinite lag sums are truncated at a lag L with the certified l2 tail carried
as metadata, so every "exact" oracle below is exact for the truncated model
and the truncation error is available separately.

The workhorse identity: with coordinates indexed by m, S_n decomposes as
sum_m g_{n,m}(omega_m) where g_{n,m} sums alpha_j over the lag window
j in [max(1,m), n] - m intersected with [0, L]. Variances, conditional
expectations given F_0, and martingale-deviation norms are all window sums
over coefficient prefix sums, which keeps them O(L + n) per evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .sequences import (
    CoefficientSequence,
    FiniteSupport,
    SequenceError,
    finite,
    sequence_from_json,
)

__all__ = [
    "ModelError",
    "DiscreteSpace",
    "SamplerSpace",
    "rademacher_space",
    "normal_space",
    "uniform_space",
    "CausalLinearModel",
    "SemiLinearModel",
    "HolderFunction",
    "abs_power",
    "soft_clip",
    "HolderModel",
    "PastConfig",
    "draw_pasts",
    "linear_as_semilinear",
    "p0_projection",
    "Projection",
    "HolderProjectionEstimate",
    "exact_variance",
    "variance_error_bound",
    "conditional_expectation_S",
    "max_conditional_drift",
    "max_conditional_drift_batch",
    "model_from_json",
]

_CENTER_TOL = 1e-12


class ModelError(ValueError):
    """Invalid model construction or an oracle used outside its domain."""


# ---------------------------------------------------------------------------
# Innovation spaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiscreteSpace:
    """Finite innovation distribution; the basis for every exact oracle."""

    points: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.points) != len(self.probs) or not self.points:
            raise ModelError("points and probs must be equal-length and nonempty")
        if any(p < 0 for p in self.probs):
            raise ModelError("probabilities must be nonnegative")
        if abs(math.fsum(self.probs) - 1.0) > _CENTER_TOL:
            raise ModelError(f"probabilities sum to {math.fsum(self.probs)!r}, not 1")

    @property
    def is_discrete(self) -> bool:
        return True

    @property
    def mean(self) -> float:
        return math.fsum(p * x for p, x in zip(self.probs, self.points))

    @property
    def variance(self) -> float:
        mu = self.mean
        return math.fsum(p * (x - mu) ** 2 for p, x in zip(self.probs, self.points))

    @property
    def second_moment(self) -> float:
        return math.fsum(p * x * x for p, x in zip(self.probs, self.points))

    def points_array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float)

    def probs_array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)

    def expect(self, values: np.ndarray) -> float:
        """E v(omega) for a vector of per-atom values."""
        return float(np.dot(self.probs_array(), values))

    def weight(self, values: np.ndarray) -> float:
        """E v(omega)^2 along the last axis."""
        return float(np.dot(self.probs_array(), np.square(values)))

    def draw_indices(self, rng: np.random.Generator, size) -> np.ndarray:
        p = self.probs_array()
        if len(self.points) == 2 and abs(p[0] - 0.5) <= _CENTER_TOL:
            # fair two-point space: one bit per draw, much faster than choice()
            return rng.integers(0, 2, size=size)
        return rng.choice(len(self.points), size=size, p=p)

    def draw(self, rng: np.random.Generator, size) -> np.ndarray:
        return self.points_array()[self.draw_indices(rng, size)]

    def to_json(self) -> dict:
        return {"kind": "discrete", "points": list(self.points), "probs": list(self.probs)}


_SAMPLER_KINDS = ("normal", "rademacher", "uniform")


@dataclass(frozen=True)
class SamplerSpace:
    """Monte-Carlo-only innovation distribution with known variance.

    ``uniform`` is centered on [-scale, scale]; ``normal`` has standard
    deviation ``scale``; ``rademacher`` ignores scale != 1 by design.
    """

    distribution: str
    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.distribution not in _SAMPLER_KINDS:
            raise ModelError(f"unknown sampler distribution {self.distribution!r}")
        if self.scale <= 0:
            raise ModelError("sampler scale must be positive")

    @property
    def is_discrete(self) -> bool:
        return False

    @property
    def mean(self) -> float:
        return 0.0

    @property
    def variance(self) -> float:
        if self.distribution == "normal":
            return self.scale**2
        if self.distribution == "rademacher":
            return 1.0
        return self.scale**2 / 3.0

    second_moment = variance

    def draw(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.distribution == "normal":
            return self.scale * rng.standard_normal(size)
        if self.distribution == "rademacher":
            return 2.0 * rng.integers(0, 2, size=size) - 1.0
        return rng.uniform(-self.scale, self.scale, size=size)

    def to_json(self) -> dict:
        return {"kind": "sampler", "distribution": self.distribution, "scale": self.scale}


def rademacher_space() -> DiscreteSpace:
    return DiscreteSpace((-1.0, 1.0), (0.5, 0.5))


def normal_space(scale: float = 1.0) -> SamplerSpace:
    return SamplerSpace("normal", scale)


def uniform_space(scale: float = 1.0) -> SamplerSpace:
    return SamplerSpace("uniform", scale)


def _space_from_json(doc: dict):
    kind = doc.get("kind")
    if kind == "discrete":
        return DiscreteSpace(tuple(doc["points"]), tuple(doc["probs"]))
    if kind == "sampler":
        return SamplerSpace(doc["distribution"], doc.get("scale", 1.0))
    raise ModelError(f"unknown innovation-space kind {kind!r}")


# ---------------------------------------------------------------------------
# Causal linear models
# ---------------------------------------------------------------------------


def _solve_lag(coeffs: CoefficientSequence, rel_tail: float, max_lag: int) -> int:
    total = coeffs.tail_power(0, 2.0)
    if not math.isfinite(total):
        raise ModelError("coefficients are not square-summable")
    if total == 0.0:
        return max(len(coeffs.prefix) - 1, 0)
    if isinstance(coeffs.tail, FiniteSupport):
        return max(len(coeffs.prefix) - 1, 0)
    target = rel_tail * total
    lo, hi = 0, 1
    while coeffs.tail_power(hi + 1, 2.0) > target:
        hi *= 2
        if hi >= max_lag:
            return max_lag
    while lo < hi:
        mid = (lo + hi) // 2
        if coeffs.tail_power(mid + 1, 2.0) <= target:
            hi = mid
        else:
            lo = mid + 1
    return max(lo, len(coeffs.prefix) - 1, 0)


class CausalLinearModel:
    """X_k = sum_{j=0..L} a_j eps_{k-j} with iid centered innovations.

    The lag L is either given or solved so the dropped squared-coefficient
    tail is below ``rel_tail`` of the total; the certified leftover is stored
    in ``tail2_bound``.
    """

    family = "linear"

    def __init__(
        self,
        coeffs: CoefficientSequence,
        innovation: DiscreteSpace | SamplerSpace,
        lag: int | None = None,
        rel_tail: float = 1e-16,
        max_lag: int = 1 << 16,
        model_id: str = "linear",
    ):
        if abs(innovation.mean) > _CENTER_TOL:
            raise ModelError("linear-model innovations must be centered")
        if innovation.variance <= 0:
            raise ModelError("innovation variance must be positive")
        self.coeffs = coeffs
        self.innovation = innovation
        self.lag = int(lag) if lag is not None else _solve_lag(coeffs, rel_tail, max_lag)
        if self.lag < 0:
            raise ModelError("lag must be >= 0")
        self.model_id = model_id
        self.a = coeffs.terms(self.lag + 1)
        if coeffs.is_custom:
            self.tail2_bound = float("nan")
        else:
            self.tail2_bound = coeffs.tail_power(self.lag + 1, 2.0)
        self.sigma2 = innovation.variance
        # cum[t+1] = a_0 + ... + a_t, cum[0] = 0
        self.cum = np.concatenate([[0.0], np.cumsum(self.a)])

    # window sums C(t) = sum_{j<=t} a_j, clipped to the truncated support
    def coeff_prefix(self, t) -> np.ndarray:
        idx = np.clip(np.asarray(t, dtype=np.int64), -1, self.lag) + 1
        return self.cum[idx]

    @property
    def is_exact(self) -> bool:
        return self.innovation.is_discrete

    def projection_norms(self) -> CoefficientSequence:
        """The sequence ||P_0(X_i)||_2 = |a_i| ||eps||_2 with its tail model."""
        return self.coeffs.scaled_abs(math.sqrt(self.innovation.second_moment))

    def to_json(self) -> dict:
        return {
            "family": "linear",
            "id": self.model_id,
            "space": self.innovation.to_json(),
            "coeffs": self.coeffs.to_json(),
            "lag": self.lag,
        }


# ---------------------------------------------------------------------------
# Semi-linear models
# ---------------------------------------------------------------------------


class SemiLinearModel:
    """X_k = sum_{j=0..L} alpha_j(omega_{k-j}).

    For a discrete space ``alpha`` is the (L+1) x M matrix alpha[j][m] =
    alpha_j(x_m) and every oracle is exact; for a sampler space ``alpha`` is a
    list of callables and only simulation is available.
    """

    family = "semilinear"

    def __init__(
        self,
        space: DiscreteSpace | SamplerSpace,
        alpha,
        tail2_bound: float = 0.0,
        norm_sequence: CoefficientSequence | None = None,
        model_id: str = "semilinear",
    ):
        self.space = space
        self.model_id = model_id
        self.tail2_bound = float(tail2_bound)
        if space.is_discrete:
            A = np.asarray(alpha, dtype=float)
            if A.ndim != 2 or A.shape[1] != len(space.points):
                raise ModelError("alpha matrix must have one column per atom")
            p = space.probs_array()
            centering = A @ p
            worst = float(np.max(np.abs(centering))) if len(centering) else 0.0
            if worst > _CENTER_TOL:
                raise ModelError(f"alpha rows must be centered under the space (worst {worst:g})")
            self.alpha = A
            self.alpha_fns = None
            self.lag = A.shape[0] - 1
            self.norms = np.sqrt(np.square(A) @ p)
            # cum[t+1] = alpha_0 + ... + alpha_t per atom
            self.cum = np.vstack([np.zeros(A.shape[1]), np.cumsum(A, axis=0)])
        else:
            fns = list(alpha)
            if not fns:
                raise ModelError("at least one lag function required")
            self.alpha = None
            self.alpha_fns = fns
            self.lag = len(fns) - 1
            self.norms = None
            self.cum = None
        if norm_sequence is None and self.norms is not None:
            norm_sequence = finite(self.norms.tolist())
        self.norm_sequence = norm_sequence

    @property
    def is_exact(self) -> bool:
        return self.space.is_discrete

    def _require_exact(self, what: str) -> None:
        if not self.is_exact:
            raise ModelError(f"{what} needs a discrete innovation space")

    def weight(self, values: np.ndarray) -> float:
        """E v(omega)^2 for per-atom value vectors (last axis over atoms)."""
        self._require_exact("weight")
        return float(np.dot(np.square(values), self.space.probs_array()))

    def weights(self, values: np.ndarray) -> np.ndarray:
        self._require_exact("weights")
        return np.square(values) @ self.space.probs_array()

    def cum_window(self, t) -> np.ndarray:
        """Per-atom window sums sum_{j<=min(t,L)} alpha_j(x)."""
        self._require_exact("cum_window")
        idx = np.clip(np.asarray(t, dtype=np.int64), -1, self.lag) + 1
        return self.cum[idx]

    def alpha_values(self, j: int, coords: np.ndarray) -> np.ndarray:
        """alpha_j evaluated on coordinates (atom indices or raw values)."""
        if j > self.lag:
            return np.zeros(np.shape(coords))
        if self.space.is_discrete:
            return self.alpha[j][coords]
        return np.asarray(self.alpha_fns[j](coords), dtype=float)

    def projection_norms(self) -> CoefficientSequence:
        if self.norm_sequence is not None:
            return self.norm_sequence
        raise ModelError("no projection-norm sequence available for sampler-space models")

    def to_json(self) -> dict:
        if not self.space.is_discrete:
            raise ModelError("sampler-space semi-linear models are not JSON-serializable")
        return {
            "family": "semilinear",
            "id": self.model_id,
            "space": self.space.to_json(),
            "alphas": self.alpha.tolist(),
            "tail_bound": self.tail2_bound,
        }


def linear_as_semilinear(model: CausalLinearModel) -> SemiLinearModel:
    """Embed a linear model via alpha_j = a_j * id; exact oracles must agree.

    Restricted to discrete innovation spaces, where the embedding is an exact
    matrix.
    """
    if not model.innovation.is_discrete:
        raise ModelError("sampler innovation spaces admit no exact embedding matrix")
    pts = model.innovation.points_array()
    A = np.outer(model.a, pts)
    norm_seq = model.projection_norms()
    return SemiLinearModel(
        model.innovation,
        A,
        tail2_bound=model.tail2_bound * model.innovation.second_moment,
        norm_sequence=norm_seq,
        model_id=model.model_id + ":semilinear",
    )


# ---------------------------------------------------------------------------
# Holder functions of semi-linear processes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HolderFunction:
    """A gamma-Holder function tag with its constant."""

    tag: str
    fn: Callable[[np.ndarray], np.ndarray]
    gamma: float
    constant: float

    def __call__(self, y):
        return self.fn(np.asarray(y, dtype=float))

    def validate(self, lo: float = -8.0, hi: float = 8.0, n: int = 2001) -> None:
        """Spot-check |f(x)-f(y)| <= C |x-y|^gamma on a dense grid."""
        x = np.linspace(lo, hi, n)
        fx = self(x)
        dx = np.abs(x[:, None] - x[None, :])
        df = np.abs(fx[:, None] - fx[None, :])
        mask = dx > 0
        worst = np.max(df[mask] - self.constant * dx[mask] ** self.gamma)
        if worst > 1e-9:
            raise ModelError(f"function violates the Holder bound by {worst:g}")


def abs_power(gamma: float) -> HolderFunction:
    if not 0.0 < gamma <= 1.0:
        raise ModelError("gamma must lie in (0, 1]")
    return HolderFunction("abs_power", lambda y: np.abs(y) ** gamma, gamma, 1.0)


def soft_clip(scale: float = 1.0) -> HolderFunction:
    if scale <= 0:
        raise ModelError("scale must be positive")
    return HolderFunction("soft_clip", lambda y, s=scale: s * np.tanh(y / s), 1.0, 1.0)


class HolderModel:
    """X_k = f(Y_k) - E f(Y_k) for a Holder f of a semi-linear Y.

    The centering constant E f(Y_0) has no closed form in general; it is
    estimated once at construction (``centering_replicates`` draws,
    counter-based stream ``centering_seed``) and frozen, with its standard
    error kept for error bars downstream. When the constant is known exactly
    (an odd f over a symmetric innovation law gives 0) pass ``centering``
    explicitly; an estimation error delta shifts S_n/sqrt(n) by
    sqrt(n) * delta, which distributional tests at large n cannot absorb.
    """

    family = "holder"

    def __init__(
        self,
        base: SemiLinearModel,
        f: HolderFunction,
        centering: float | None = None,
        centering_replicates: int = 1_000_000,
        centering_seed: int = 20260810,
        model_id: str = "holder",
        validate: bool = True,
    ):
        if validate:
            f.validate()
        self.base = base
        self.f = f
        self.model_id = model_id
        self.lag = base.lag
        self.space = base.space
        if centering is not None:
            self.centering = float(centering)
            self.centering_se = 0.0
            return
        from .simulate import make_rng  # local import to avoid a cycle

        rng = make_rng(centering_seed, purpose=3)
        vals = np.empty(centering_replicates)
        chunk = 1 << 16
        done = 0
        while done < centering_replicates:
            r = min(chunk, centering_replicates - done)
            y = self._y_samples(rng, r)
            vals[done : done + r] = self.f(y)
            done += r
        self.centering = float(np.mean(vals))
        self.centering_se = float(np.std(vals, ddof=1) / math.sqrt(centering_replicates))

    def _y_samples(self, rng: np.random.Generator, r: int) -> np.ndarray:
        L = self.lag
        if self.space.is_discrete:
            idx = self.space.draw_indices(rng, (r, L + 1))
            y = np.zeros(r)
            for j in range(L + 1):
                y += self.base.alpha[j][idx[:, j]]
            return y
        vals = self.space.draw(rng, (r, L + 1))
        y = np.zeros(r)
        for j in range(L + 1):
            y += self.base.alpha_values(j, vals[:, j])
        return y

    @property
    def is_exact(self) -> bool:
        return False

    def gamma_norms(self) -> np.ndarray:
        """|| |alpha_j|^gamma ||_{2,X} per lag (discrete base only)."""
        self.base._require_exact("gamma_norms")
        p = self.base.space.probs_array()
        return np.sqrt(np.abs(self.base.alpha) ** (2.0 * self.f.gamma) @ p)

    def projection_norm_bounds(self) -> CoefficientSequence:
        """The certified bound 2C || |alpha_i|^gamma || on ||P_0(X_i)||_2."""
        return finite((2.0 * self.f.constant * self.gamma_norms()).tolist())

    def projection_bound(self, i: int) -> float:
        """2C || |alpha_i|^gamma ||_{2,X}; zero beyond the truncation lag."""
        if i > self.lag:
            return 0.0
        return 2.0 * self.f.constant * float(self.gamma_norms()[i])

    def to_json(self) -> dict:
        return {
            "family": "holder",
            "id": self.model_id,
            "base": self.base.to_json(),
            "f": {"kind": self.f.tag, "gamma": self.f.gamma, "constant": self.f.constant},
        }


# ---------------------------------------------------------------------------
# Pasts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PastConfig:
    """A frozen past: values[u] = omega_{-u} for u = 0..depth-1.

    ``indices`` carries the atom indices for discrete spaces (what the exact
    semi-linear oracles consume); ``values`` always carries the raw points.
    """

    values: tuple[float, ...]
    indices: tuple[int, ...] | None
    past_id: int = 0

    @property
    def depth(self) -> int:
        return len(self.values)

    def values_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def indices_array(self) -> np.ndarray:
        if self.indices is None:
            raise ModelError("past has no atom indices (sampler space)")
        return np.asarray(self.indices, dtype=np.int64)


def _model_space(model):
    return model.innovation if isinstance(model, CausalLinearModel) else model.space


def draw_pasts(model, count: int, master_seed: int, depth: int | None = None) -> list[PastConfig]:
    """Draw independent pinned pasts from the invariant coordinate law."""
    from .simulate import make_rng

    space = _model_space(model)
    depth = int(depth) if depth is not None else model.lag + 1
    out = []
    for p in range(count):
        rng = make_rng(master_seed, purpose=2, past_id=p)
        if space.is_discrete:
            idx = space.draw_indices(rng, depth)
            vals = space.points_array()[idx]
            out.append(PastConfig(tuple(vals), tuple(int(i) for i in idx), past_id=p))
        else:
            vals = space.draw(rng, depth)
            out.append(PastConfig(tuple(vals), None, past_id=p))
    return out


def _check_past_depth(model, past: PastConfig) -> None:
    need = model.lag + 1
    if past.depth < need:
        raise ModelError(
            f"past depth {past.depth} is insufficient: the truncated model needs "
            f"{need} coordinates (omega_0 .. omega_-{need - 1})"
        )


# ---------------------------------------------------------------------------
# Projections
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Projection:
    """Exact single-coordinate projection P_0(X_i): a function of omega_0."""

    lag: int
    norm2: float
    fn: Callable[[np.ndarray], np.ndarray]
    values: tuple[float, ...] | None = None  # per-atom values for discrete spaces

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class HolderProjectionEstimate:
    """Monte Carlo estimate of ||P_0(X_i)||_2 with its standard error.

    ``norm2sq`` is the unbiased cross-product estimate of the squared norm
    (it can go slightly negative at tiny true norms); ``low_precision`` marks
    lags whose requested budget was truncated.
    """

    lag: int
    norm2: float
    norm2_se: float
    norm2sq: float
    norm2sq_se: float
    replicates: int
    low_precision: bool = False


def p0_projection(model, i: int, replicates: int = 1 << 14, master_seed: int = 7, inner: int = 1):
    """P_0(X_i) = E(X_i|F_0) - E(X_i|F_-1).

    Exact for linear and semi-linear models (it is alpha_i viewed as a
    function of omega_0). For Holder models, returns a Monte Carlo norm
    estimate built from two conditionally independent increment draws per
    sampled past, which makes the squared-norm estimator unbiased.
    """
    if i < 0:
        raise ModelError("lag must be >= 0")
    if isinstance(model, CausalLinearModel):
        a_i = float(model.a[i]) if i <= model.lag else 0.0
        rms = math.sqrt(model.innovation.second_moment)
        return Projection(i, abs(a_i) * rms, lambda x, c=a_i: c * x)
    if isinstance(model, SemiLinearModel):
        if model.space.is_discrete:
            row = model.alpha[i] if i <= model.lag else np.zeros(len(model.space.points))
            pts = model.space.points_array()

            def fn(x, row=row, pts=pts):
                idx = np.searchsorted(pts, np.asarray(x, dtype=float))
                return row[np.clip(idx, 0, len(pts) - 1)]

            return Projection(i, math.sqrt(model.weight(row)), fn, tuple(row.tolist()))
        fn = model.alpha_fns[i] if i <= model.lag else (lambda x: np.zeros(np.shape(x)))
        return Projection(i, float("nan"), fn)
    if isinstance(model, HolderModel):
        return _holder_projection(model, i, replicates, master_seed, inner)
    raise ModelError(f"unsupported model type {type(model).__name__}")


def _holder_increment_draws(
    model: HolderModel, i: int, rng: np.random.Generator, r: int, omega0, tail_sum: np.ndarray
) -> np.ndarray:
    """One conditionally independent draw of the P_0(X_i) integrand per past.

    Common random numbers difference f at two values of the age-i coordinate
    (the pinned omega_0 versus a fresh draw), holding the shared future
    coordinates and the past tail fixed.
    """
    base = model.base
    space = model.space
    if space.is_discrete:
        fresh = space.draw_indices(rng, (r, i + 1))
    else:
        fresh = space.draw(rng, (r, i + 1))
    u = np.zeros(r)
    for j in range(min(i, base.lag + 1)):
        u += base.alpha_values(j, fresh[:, j])
    a_i_omega0 = base.alpha_values(i, omega0)
    a_i_fresh = base.alpha_values(i, fresh[:, i])
    y1 = u + a_i_omega0 + tail_sum
    y2 = u + a_i_fresh + tail_sum
    return model.f(y1) - model.f(y2)


_HOLDER_BUDGET_CAP = 1 << 22


def _holder_projection(
    model: HolderModel, i: int, replicates: int, master_seed: int, inner: int
) -> HolderProjectionEstimate:
    from .simulate import make_rng

    low_precision = False
    budget = replicates * (i + 1)
    if budget > _HOLDER_BUDGET_CAP:
        replicates = max(_HOLDER_BUDGET_CAP // (i + 1), 256)
        low_precision = True
    rng = make_rng(master_seed, purpose=4, past_id=i)
    base = model.base
    space = model.space
    r = replicates
    # pinned coordinates: omega_0 and the deeper past feeding the lag tail
    if space.is_discrete:
        omega0 = space.draw_indices(rng, r)
        past = space.draw_indices(rng, (r, max(base.lag - i, 0)))
    else:
        omega0 = space.draw(rng, r)
        past = space.draw(rng, (r, max(base.lag - i, 0)))
    tail_sum = np.zeros(r)
    for j in range(i + 1, base.lag + 1):
        tail_sum += base.alpha_values(j, past[:, j - i - 1])

    def one_estimate() -> np.ndarray:
        acc = np.zeros(r)
        for _ in range(inner):
            acc += _holder_increment_draws(model, i, rng, r, omega0, tail_sum)
        return acc / inner

    g1 = one_estimate()
    g2 = one_estimate()
    prod = g1 * g2  # E[prod | past] = P_0(X_i)(past)^2
    m2 = float(np.mean(prod))
    se2 = float(np.std(prod, ddof=1) / math.sqrt(r))
    norm = math.sqrt(max(m2, 0.0))
    if m2 > se2:
        norm_se = se2 / (2.0 * norm)
    else:
        norm_se = math.sqrt(se2)
    return HolderProjectionEstimate(i, norm, norm_se, m2, se2, r, low_precision)


# ---------------------------------------------------------------------------
# Exact second-order oracles
# ---------------------------------------------------------------------------


def _future_weights(model, n: int, shift=None) -> float:
    """sum over coordinates m=1..n of E g_{n,m}(omega)^2, optionally with a
    martingale increment subtracted from every future window."""
    L = model.lag
    t_hi = min(n - 1, L)
    t = np.arange(t_hi + 1)
    if isinstance(model, CausalLinearModel):
        w = model.coeff_prefix(t)
        top = model.coeff_prefix(L)
        if shift is not None:
            w = w - shift
            top = top - shift
        s = float(np.dot(w, w))
        if n - 1 > L:
            s += (n - 1 - L) * float(top * top)
        return model.sigma2 * s
    # semi-linear: per-atom windows
    W = model.cum_window(t)
    top = model.cum_window(L)
    if shift is not None:
        W = W - shift
        top = top - shift
    s = float(np.sum(model.weights(W)))
    if n - 1 > L:
        s += (n - 1 - L) * model.weight(top)
    return s


def _past_weights(model, n: int) -> float:
    """sum over coordinates m<=0 of E g_{n,m}(omega)^2."""
    L = model.lag
    if L == 0:
        return 0.0
    u = np.arange(L)
    if isinstance(model, CausalLinearModel):
        g = model.coeff_prefix(np.minimum(u + n, L)) - model.coeff_prefix(u)
        return model.sigma2 * float(np.dot(g, g))
    G = model.cum_window(np.minimum(u + n, L)) - model.cum_window(u)
    return float(np.sum(model.weights(G)))


def _require_exact_model(model, what: str) -> None:
    if isinstance(model, HolderModel):
        raise ModelError(f"{what} is not available for Holder models (Monte Carlo only)")
    if isinstance(model, CausalLinearModel):
        return
    if isinstance(model, SemiLinearModel):
        model._require_exact(what)
        return
    raise ModelError(f"unsupported model type {type(model).__name__}")


def exact_variance(model, n: int) -> float:
    """Var(S_n) for the truncated model, via the coordinate decomposition.

    Exact (up to floating point) for linear models and discrete semi-linear
    models; see ``variance_error_bound`` for the certified truncation error.
    """
    if n < 1:
        raise ModelError("horizon must be >= 1")
    _require_exact_model(model, "exact_variance")
    return _future_weights(model, n) + _past_weights(model, n)


def variance_error_bound(model, n: int) -> float:
    """Certified bound on |Var_true(S_n) - Var_truncated(S_n)|.

    Cauchy-Schwarz gives ||S_n^true - S_n^trunc||^2 <= n^2 * tail2, where
    tail2 is the dropped squared-coefficient mass (times the innovation
    second moment for linear models).
    """
    if isinstance(model, CausalLinearModel):
        tail2 = model.tail2_bound * model.innovation.second_moment
    elif isinstance(model, SemiLinearModel):
        tail2 = model.tail2_bound
    else:
        raise ModelError("no certified variance bound for this model type")
    if not math.isfinite(tail2):
        return float("inf")
    diff2 = n * n * tail2
    return diff2 + 2.0 * math.sqrt(diff2 * max(exact_variance(model, n), 0.0))


def _drift_coefficients(model, ks: np.ndarray) -> np.ndarray:
    """Coefficients C[k_idx, u] with E(S_k|F_0) = sum_u C[k_idx, u] at omega_-u.

    For linear models the entries multiply the past values directly; for
    semi-linear models they are per-atom window sums and the array is 3-d
    (k, u, atom).
    """
    L = model.lag
    u = np.arange(L + 1)
    if isinstance(model, CausalLinearModel):
        hi = np.minimum(u[None, :] + ks[:, None], L)
        return model.coeff_prefix(hi) - model.coeff_prefix(u)[None, :]
    hi = np.minimum(u[None, :] + ks[:, None], L)
    return model.cum_window(hi) - model.cum_window(u)[None, :, :]


def conditional_expectation_S(model, n: int, past: PastConfig) -> float:
    """E(S_n | F_0) evaluated at a pinned past, exactly for exact models."""
    if n < 1:
        raise ModelError("horizon must be >= 1")
    _require_exact_model(model, "conditional_expectation_S")
    _check_past_depth(model, past)
    C = _drift_coefficients(model, np.array([n]))
    return float(_drift_value(model, C, past)[0])


def _drift_value(model, C: np.ndarray, past: PastConfig) -> np.ndarray:
    L = model.lag
    if isinstance(model, CausalLinearModel):
        vals = past.values_array()[: L + 1]
        return C @ vals
    idx = past.indices_array()[: L + 1]
    sel = C[:, np.arange(L + 1), idx]
    return np.sum(sel, axis=1)


def drift_path(model, n: int, past: PastConfig) -> np.ndarray:
    """The exact vector (E(S_1|F_0), ..., E(S_n|F_0)) at a pinned past.

    Window sums stabilise for k > L, so only min(n, L+1) rows are distinct.
    """
    _require_exact_model(model, "drift_path")
    _check_past_depth(model, past)
    khead = np.arange(1, min(n, model.lag + 1) + 1)
    vals = _drift_value(model, _drift_coefficients(model, khead), past)
    if n > len(vals):
        vals = np.concatenate([vals, np.full(n - len(vals), vals[-1])])
    return vals


def max_conditional_drift(model, n: int, past: PastConfig) -> float:
    """max_{1<=k<=n} |E(S_k|F_0)| at a pinned past (exact)."""
    return float(np.max(np.abs(drift_path(model, n, past))))


def max_conditional_drift_batch(model, n: int, pasts: Sequence[PastConfig]) -> np.ndarray:
    """Vectorised max_{k<=n} |E(S_k|F_0)| over many pasts."""
    _require_exact_model(model, "max_conditional_drift_batch")
    L = model.lag
    khead = np.arange(1, min(n, L + 1) + 1)
    C = _drift_coefficients(model, khead)
    if isinstance(model, CausalLinearModel):
        P = np.stack([p.values_array()[: L + 1] for p in pasts], axis=1)  # (L+1, R)
        paths = C @ P  # (K, R)
    else:
        idx = np.stack([p.indices_array()[: L + 1] for p in pasts], axis=0)  # (R, L+1)
        sel = C[:, np.arange(L + 1)[None, :], idx]  # (K, R, L+1)
        paths = np.sum(sel, axis=2)
    return np.max(np.abs(paths), axis=0)


# ---------------------------------------------------------------------------
# JSON loading
# ---------------------------------------------------------------------------


def model_from_json(doc: dict):
    """Build a model from its JSON description (see the CLI config schema)."""
    family = doc.get("family")
    model_id = doc.get("id", family or "model")
    if family == "linear":
        space = _space_from_json(doc["space"])
        coeffs = sequence_from_json(doc["coeffs"])
        m = CausalLinearModel(
            coeffs,
            space,
            lag=doc.get("lag"),
            rel_tail=doc.get("rel_tail", 1e-16),
            max_lag=doc.get("max_lag", 1 << 16),
            model_id=model_id,
        )
        if doc.get("as_semilinear"):
            sm = linear_as_semilinear(m)
            sm.model_id = model_id
            return sm
        return m
    if family == "semilinear":
        space = _space_from_json(doc["space"])
        return SemiLinearModel(
            space,
            doc["alphas"],
            tail2_bound=doc.get("tail_bound", 0.0),
            model_id=model_id,
        )
    if family == "holder":
        base = model_from_json(doc["base"])
        if not isinstance(base, SemiLinearModel):
            raise ModelError("holder base must be a semi-linear model")
        fdoc = doc["f"]
        kind = fdoc.get("kind")
        if kind == "abs_power":
            f = abs_power(fdoc.get("gamma", 1.0))
        elif kind == "soft_clip":
            f = soft_clip(fdoc.get("scale", 1.0))
        else:
            raise ModelError(f"unknown Holder function kind {kind!r}")
        return HolderModel(
            base,
            f,
            centering=doc.get("centering"),
            centering_replicates=doc.get("centering_replicates", 1_000_000),
            centering_seed=doc.get("centering_seed", 20260810),
            model_id=model_id,
        )
    raise ModelError(f"unknown model family {family!r}")
