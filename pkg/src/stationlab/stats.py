"""Distributional acceptance tests: KS goodness of fit, CLT, sup-functional WIP,
and the variance-growth diagnostic for divergent cases.

The reference variance sigma^2 always comes from the exact Gordin-increment
oracle, never from the samples under test; models whose coefficient sum has
no certified limit are refused (there is no sqrt(n)-normalised reference law
to test against).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .martingale import limit_increment
from .models import CausalLinearModel, HolderModel, ModelError, PastConfig, SemiLinearModel
from .models import exact_variance as _exact_variance
from .simulate import replicate_batch, terminal_sums

__all__ = [
    "DivergentReferenceError",
    "DegenerateVarianceError",
    "TiesError",
    "GoodnessOfFitResult",
    "kolmogorov_sf",
    "ks_test",
    "normal_reference",
    "bm_sup_reference",
    "reference_sigma2",
    "clt_test",
    "wip_sup_test",
    "boundedness_diagnostic",
    "BoundednessTable",
]


class DivergentReferenceError(RuntimeError):
    """No sqrt(n)-normalised limit law exists (coefficient sum diverges)."""


class DegenerateVarianceError(RuntimeError):
    """The limit variance is zero (coboundary); the reference law is degenerate."""


class TiesError(ValueError):
    """Too many tied sample values for a continuous-reference KS test."""


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov
# ---------------------------------------------------------------------------


def kolmogorov_sf(t: float) -> float:
    """Survival function of the Kolmogorov distribution.

    Two complementary expansions: the Jacobi-theta form converges fast for
    small t, the alternating exponential series for large t.
    """
    if t <= 0.0:
        return 1.0
    if t < 1.18:
        q = math.exp(-math.pi**2 / (8.0 * t * t))
        cdf = math.sqrt(2.0 * math.pi) / t * (q + q**9 + q**25 + q**49)
        return min(max(1.0 - cdf, 0.0), 1.0)
    s = 0.0
    for j in range(1, 200):
        term = 2.0 * (-1.0) ** (j - 1) * math.exp(-2.0 * j * j * t * t)
        s += term
        if abs(term) < 1e-17:
            break
    return min(max(s, 0.0), 1.0)


@dataclass(frozen=True)
class GoodnessOfFitResult:
    """One Kolmogorov-Smirnov verdict against a continuous reference law."""

    test: str
    sample_size: int
    statistic: float
    pvalue: float
    reference: str
    alpha: float
    passed: bool
    past_id: int | None = None

    def csv_row(self, model_id: str, n: int):
        return (
            self.test,
            model_id,
            n,
            self.sample_size,
            self.statistic,
            self.pvalue,
            self.alpha,
            self.passed,
            "" if self.past_id is None else self.past_id,
        )


_TIES_FRACTION = 0.01


def ks_test(
    samples: np.ndarray,
    reference_cdf: Callable[[np.ndarray], np.ndarray],
    alpha: float = 0.01,
    name: str = "KS",
    reference: str = "reference",
    past_id: int | None = None,
) -> GoodnessOfFitResult:
    """Two-sided one-sample KS test with the asymptotic Kolmogorov p-value.

    Intended for sample sizes >= 1000 where the asymptotic law is accurate.
    A tie fraction above 1% is rejected: atoms in the sample law (discrete
    innovations at small horizons) invalidate the continuous-reference test.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    r = len(x)
    if r < 2:
        raise ValueError("need at least two samples")
    n_unique = len(np.unique(x))
    if r - n_unique > _TIES_FRACTION * r:
        raise TiesError(
            f"{r - n_unique} tied values among {r} samples; increase the horizon "
            "so the sample law has no visible atoms"
        )
    f = np.asarray(reference_cdf(x), dtype=float)
    i = np.arange(1, r + 1)
    d_plus = np.max(i / r - f)
    d_minus = np.max(f - (i - 1) / r)
    stat = float(max(d_plus, d_minus))
    p = kolmogorov_sf(math.sqrt(r) * stat)
    return GoodnessOfFitResult(name, r, stat, p, reference, alpha, p > alpha, past_id)


# ---------------------------------------------------------------------------
# Reference laws
# ---------------------------------------------------------------------------


def normal_reference(sigma2: float) -> Callable[[np.ndarray], np.ndarray]:
    """CDF of N(0, sigma2)."""
    if sigma2 <= 0:
        raise DegenerateVarianceError(f"variance must be positive, got {sigma2}")
    s = math.sqrt(sigma2)
    return lambda x: special.ndtr(np.asarray(x, dtype=float) / s)

def bm_sup_reference(sigma2: float) -> Callable[[np.ndarray], np.ndarray]:
    """CDF of sigma * sup_{t<=1} W_t: 2 Phi(x/sigma) - 1 for x >= 0 (reflection)."""
    if sigma2 <= 0:
        raise DegenerateVarianceError(f"variance must be positive, got {sigma2}")
    s = math.sqrt(sigma2)

    def cdf(x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0.0, 0.0, 2.0 * special.ndtr(x / s) - 1.0)

    return cdf


def reference_sigma2(model, sigma2: float | None = None) -> float:
    """The limit variance ||D||_2^2 from the exact oracle.

    Holder models have no exact oracle, so the caller must supply an
    independent estimate (e.g. martingale.estimate_gordin_norm2).
    """
    if sigma2 is not None:
        return float(sigma2)
    if isinstance(model, HolderModel):
        raise ModelError(
            "no exact limit variance for Holder models; pass sigma2 from "
            "martingale.estimate_gordin_norm2"
        )
    d = limit_increment(model)
    if d.limit_exists is False:
        raise DivergentReferenceError(
            "the coefficient sum diverges: n^{-1/2} S_n has no limit law; "
            "run boundedness_diagnostic instead"
        )
    if d.limit_exists is None:
        raise DivergentReferenceError(
            "cannot certify convergence of the coefficient sum; no reference law"
        )
    return d.norm2**2


# ---------------------------------------------------------------------------
# CLT and WIP tests
# ---------------------------------------------------------------------------


def clt_test(
    model,
    n: int,
    count: int,
    master_seed: int,
    alpha: float = 0.01,
    quenched_pasts: Sequence[PastConfig] | None = None,
    sigma2: float | None = None,
    workers: int = 1,
):
    """KS of {S_n / sqrt(n)} against N(0, sigma2) with the oracle sigma2.

    With ``quenched_pasts`` one test is run per pinned past (futures are the
    only randomness) and a list of results is returned.
    """
    s2 = reference_sigma2(model, sigma2)
    ref = normal_reference(s2)
    ref_name = f"N(0,{s2:g})"
    if quenched_pasts is None:
        sums = terminal_sums(model, n, count, master_seed, workers=workers)
        return ks_test(sums / math.sqrt(n), ref, alpha, "clt", ref_name)
    out = []
    for past in quenched_pasts:
        sums = terminal_sums(model, n, count, master_seed, past=past, workers=workers)
        out.append(ks_test(sums / math.sqrt(n), ref, alpha, "clt_quenched", ref_name, past.past_id))
    return out


def wip_sup_test(
    model,
    n: int,
    count: int,
    master_seed: int,
    alpha: float = 0.01,
    sigma2: float | None = None,
    workers: int = 1,
) -> GoodnessOfFitResult:
    """KS of {n^{-1/2} max(0, max_k S_k)} against the Brownian sup law.

    The sup of the polygonal partial-sum path equals max(0, max_k S_k), and
    the limit CDF is 2 Phi(x/sigma) - 1 by the reflection principle. The
    model must carry a summable projection-norm sequence (the route to the
    maximal approximation); degenerate limit variance is refused.
    """
    if isinstance(model, HolderModel):
        bound_seq = model.projection_norm_bounds()
    else:
        bound_seq = model.projection_norms()
    from .sequences import DIVERGES, check_h

    if check_h(bound_seq, grid=(1 << 12,)).classification == DIVERGES:
        raise DivergentReferenceError(
            "projection norms are not summable; the maximal approximation route fails"
        )
    s2 = reference_sigma2(model, sigma2)
    if s2 <= 0:
        raise DegenerateVarianceError("limit variance is zero (coboundary case)")
    ref = bm_sup_reference(s2)
    batch = replicate_batch(model, n, count, master_seed, workers=workers)
    samples = np.maximum(batch.max_s, 0.0) / math.sqrt(n)
    return ks_test(samples, ref, alpha, "wip_sup", f"BMsup({s2:g})")


# ---------------------------------------------------------------------------
# Stochastic-boundedness diagnostic
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundednessTable:
    """Exact Var(S_n)/n over a horizon grid plus empirical |S_n|/sqrt(n) quantiles."""

    model_id: str
    horizons: tuple[int, ...]
    var_over_n: tuple[float, ...]
    q90_abs: tuple[float, ...]
    flag: str

    def csv_rows(self):
        return [
            (self.model_id, n, v, q, self.flag)
            for n, v, q in zip(self.horizons, self.var_over_n, self.q90_abs)
        ]


def _growth_flag(model, values: Sequence[float]) -> str:
    v = np.asarray(values, dtype=float)
    if len(v) < 2 or float(np.max(v)) <= 0:
        return "Stable"
    if (np.max(v) - np.min(v)) < 0.01 * np.max(v):
        return "Stable"
    increasing = bool(np.all(np.diff(v) > 0))
    if increasing and v[-1] >= 1.2 * v[0]:
        return "Growth"
    if increasing:
        return "Converging"
    if bool(np.all(np.diff(v) < 0)):
        return "Shrinking"
    return "Mixed"


def boundedness_diagnostic(
    model,
    horizons: Sequence[int],
    count: int = 500,
    master_seed: int = 0,
    workers: int = 1,
) -> BoundednessTable:
    """Exact Var(S_n)/n over the grid; flags Growth when it rises monotonically
    by >= 20% from the first to the last horizon.

    The empirical 0.9-quantile of |S_n|/sqrt(n) accompanies each row as a
    tightness proxy.
    """
    horizons = tuple(int(n) for n in horizons)
    var_over_n = tuple(_exact_variance(model, n) / n for n in horizons)
    q90 = []
    for n in horizons:
        batch = replicate_batch(model, n, count, master_seed, workers=workers)
        q90.append(float(np.quantile(np.abs(batch.s_n) / math.sqrt(n), 0.9)))
    return BoundednessTable(model.model_id, horizons, var_over_n, tuple(q90), _growth_flag(model, var_over_n))
