"""Coefficient sequences with analytic tail models and summability checks.

A :class:`CoefficientSequence` is a real sequence (u_i) given by a finite
prefix plus a tail model that describes every later term in closed form.
Because convergence of an infinite series can never be decided from finitely
many terms, every classification below is derived from the tail model; raw
truncation only ever yields ``Unknown``.

The condition checks operate on |u_i| (in applications u_i is a projection
norm, hence nonnegative):

``check_gl``
    sum_k k u_k^2 < inf, the projection form of the Gordin-Lifsic condition.
``check_h``
    sum_k u_k < inf (Hannan).
``check_mw``
    sum_{k>=1} k^{-1/2} (sum_{i>=k} u_i^2)^{1/2} < inf (strong
    Maxwell-Woodroofe form).
``lemma_series_lhs``
    sum_{k>0} (k^{-1} sum_{i>=k} u_i^q)^{1/q} for q > 1, which dominates the
    Hannan sum and is equivalent to it for nonincreasing sequences.

Scalar tail sums use ``math.fsum`` (exact compensated summation); the long
partial-sum grids attached to verdicts are computed with vectorised numpy
cumulative sums and are diagnostic, not certified values.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special


_LAGUERRE_CACHE: tuple[np.ndarray, np.ndarray] | None = None


def _laguerre_nodes() -> tuple[np.ndarray, np.ndarray]:
    global _LAGUERRE_CACHE
    if _LAGUERRE_CACHE is None:
        _LAGUERRE_CACHE = np.polynomial.laguerre.laggauss(64)
    return _LAGUERRE_CACHE

__all__ = [
    "CONVERGES",
    "DIVERGES",
    "UNKNOWN",
    "DEFAULT_GRID",
    "SequenceError",
    "TailModel",
    "FiniteSupport",
    "Geometric",
    "PowerLaw",
    "DyadicSpikes",
    "LogPower",
    "Custom",
    "CoefficientSequence",
    "ConditionVerdict",
    "CustomTail",
    "finite",
    "geometric",
    "power_law",
    "dyadic_spikes",
    "log_power",
    "custom",
    "counterexample_sequence",
    "tail_l2",
    "check_gl",
    "check_h",
    "check_mw",
    "lemma_series_lhs",
    "rio_integral",
    "rio_sum",
    "sequence_from_json",
]

CONVERGES = "Converges"
DIVERGES = "Diverges"
UNKNOWN = "Unknown"

#: Dyadic cutoffs used for the diagnostic partial-sum grids.
DEFAULT_GRID = tuple(2**j for j in range(4, 21))

_BOUNDARY_TOL = 1e-12


class SequenceError(ValueError):
    """Invalid sequence construction or an operation outside a model's contract."""


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise SequenceError(msg)


# ---------------------------------------------------------------------------
# Tail models
# ---------------------------------------------------------------------------


class TailModel:
    """Closed-form description of u_i for indices beyond the explicit prefix.

    Subclasses provide exact power-tail sums sum_{i>=k} |u_i|^m and analytic
    convergence classifications for the weighted series sum_k k^s |u_k|^m.
    """

    kind = "base"

    def term(self, i: int) -> float:
        raise NotImplementedError

    def terms(self, start: int, stop: int) -> np.ndarray:
        """Vector of u_i for start <= i < stop."""
        return np.array([self.term(i) for i in range(start, stop)], dtype=float)

    def power_tail(self, k: int, m: float) -> float:
        """Exact sum_{i>=k} |u_i|^m; ``inf`` when the series diverges."""
        raise NotImplementedError

    def classify_weighted(self, s: float, m: float) -> str:
        """Convergence of sum_k k^s |u_k|^m."""
        raise NotImplementedError

    def classify_mw(self) -> str:
        """Convergence of sum_{k>=1} k^{-1/2} sqrt(sum_{i>=k} u_i^2)."""
        raise NotImplementedError

    def classify_lemma(self, q: float) -> str:
        """Convergence of sum_{k>0} (k^{-1} sum_{i>=k} |u_i|^q)^{1/q}."""
        raise NotImplementedError

    def params(self) -> dict:
        return {}


@dataclass(frozen=True)
class FiniteSupport(TailModel):
    """All terms beyond the prefix are exactly zero."""

    kind = "finite"

    def term(self, i: int) -> float:
        return 0.0

    def terms(self, start: int, stop: int) -> np.ndarray:
        return np.zeros(max(stop - start, 0))

    def power_tail(self, k: int, m: float) -> float:
        return 0.0

    def classify_weighted(self, s: float, m: float) -> str:
        return CONVERGES

    def classify_mw(self) -> str:
        return CONVERGES

    def classify_lemma(self, q: float) -> str:
        return CONVERGES


@dataclass(frozen=True)
class Geometric(TailModel):
    """u_i = amplitude * ratio^i with 0 < ratio < 1."""

    ratio: float
    amplitude: float = 1.0
    kind = "geometric"

    def __post_init__(self) -> None:
        _require(0.0 < self.ratio < 1.0, f"geometric ratio must lie in (0,1), got {self.ratio}")

    def term(self, i: int) -> float:
        return self.amplitude * self.ratio**i

    def terms(self, start: int, stop: int) -> np.ndarray:
        i = np.arange(start, stop, dtype=float)
        return self.amplitude * self.ratio**i

    def power_tail(self, k: int, m: float) -> float:
        rm = self.ratio**m
        return abs(self.amplitude) ** m * self.ratio ** (m * k) / (1.0 - rm)

    def classify_weighted(self, s: float, m: float) -> str:
        return CONVERGES

    def classify_mw(self) -> str:
        return CONVERGES

    def classify_lemma(self, q: float) -> str:
        return CONVERGES

    def params(self) -> dict:
        return {"ratio": self.ratio, "amplitude": self.amplitude}


@dataclass(frozen=True)
class PowerLaw(TailModel):
    """u_i = amplitude * (i+1)^-exponent, exponent > 0."""

    exponent: float
    amplitude: float = 1.0
    kind = "power_law"

    def __post_init__(self) -> None:
        _require(self.exponent > 0.0, f"power-law exponent must be positive, got {self.exponent}")
        _require(self.amplitude >= 0.0, f"power-law amplitude must be >= 0, got {self.amplitude}")

    def term(self, i: int) -> float:
        return self.amplitude * float(i + 1) ** -self.exponent

    def terms(self, start: int, stop: int) -> np.ndarray:
        i = np.arange(start, stop, dtype=float)
        return self.amplitude * (i + 1.0) ** -self.exponent

    def power_tail(self, k: int, m: float) -> float:
        if self.amplitude == 0.0:
            return 0.0
        mp = m * self.exponent
        if mp <= 1.0 + _BOUNDARY_TOL:
            return math.inf
        # Hurwitz zeta: sum_{i>=k} (i+1)^-mp = zeta(mp, k+1)
        return abs(self.amplitude) ** m * float(special.zeta(mp, k + 1))

    def classify_weighted(self, s: float, m: float) -> str:
        if self.amplitude == 0.0:
            return CONVERGES
        return CONVERGES if m * self.exponent - s > 1.0 + _BOUNDARY_TOL else DIVERGES

    def classify_mw(self) -> str:
        # tail_l2(k) ~ k^(1-2p)/(2p-1) for p > 1/2, so the summand ~ k^-p.
        if self.amplitude == 0.0:
            return CONVERGES
        return CONVERGES if self.exponent > 1.0 + _BOUNDARY_TOL else DIVERGES

    def classify_lemma(self, q: float) -> str:
        # Inner tail finite iff q*p > 1; then the summand ~ k^-p as for MW.
        if self.amplitude == 0.0:
            return CONVERGES
        return CONVERGES if self.exponent > 1.0 + _BOUNDARY_TOL else DIVERGES

    def params(self) -> dict:
        return {"exponent": self.exponent, "amplitude": self.amplitude}


@dataclass(frozen=True)
class DyadicSpikes(TailModel):
    """u_i = 0 off powers of two; u_{2^k} = amplitude * 2^{-k/2} k^{-b}, k >= 1.

    Requires b in (1/2, 1): then sum u_i and sum i u_i^2 converge while the
    Maxwell-Woodroofe sum diverges (its dyadic blocks are bounded below by
    c * l^-b).
    """

    exponent: float
    amplitude: float = 1.0
    kind = "dyadic_spikes"

    def __post_init__(self) -> None:
        _require(
            0.5 < self.exponent < 1.0,
            f"dyadic-spikes exponent must lie in the open interval (1/2, 1), got {self.exponent}",
        )

    def _spike(self, k: int) -> float:
        return self.amplitude * 2.0 ** (-k / 2.0) * float(k) ** -self.exponent

    def term(self, i: int) -> float:
        if i < 2:
            return 0.0
        k = i.bit_length() - 1
        return self._spike(k) if i == (1 << k) else 0.0

    def terms(self, start: int, stop: int) -> np.ndarray:
        out = np.zeros(max(stop - start, 0))
        k = 1
        while (1 << k) < stop:
            i = 1 << k
            if i >= start:
                out[i - start] = self._spike(k)
            k += 1
        return out

    @staticmethod
    def _first_spike_exponent(k: int) -> int:
        """Smallest j >= 1 with 2^j >= k."""
        if k <= 2:
            return 1
        return int(k - 1).bit_length()

    def power_tail(self, k: int, m: float) -> float:
        j = self._first_spike_exponent(max(k, 0))
        total = 0.0
        comp = 0.0
        while True:
            t = abs(self._spike(j)) ** m
            # Kahan step; terms decay at least geometrically (ratio 2^{-m/2}).
            y = t - comp
            s = total + y
            comp = (s - total) - y
            total = s
            if t <= total * 1e-22 and j > self._first_spike_exponent(max(k, 0)) + 4:
                break
            j += 1
            if j > 8192:  # pragma: no cover - unreachable for valid parameters
                break
        return total

    def classify_weighted(self, s: float, m: float) -> str:
        # sum_j 2^{j(s - m/2)} j^{-mb}: geometric unless s == m/2.
        gap = s - m / 2.0
        if gap < -_BOUNDARY_TOL:
            return CONVERGES
        if gap > _BOUNDARY_TOL:
            return DIVERGES
        return CONVERGES if m * self.exponent > 1.0 + _BOUNDARY_TOL else DIVERGES

    def classify_mw(self) -> str:
        # Dyadic blocks contribute at least c * l^-b with b < 1.
        return DIVERGES

    def classify_lemma(self, q: float) -> str:
        # Block sums scale like 2^{l(1/2 - 1/q)} l^-b.
        if q < 2.0 - _BOUNDARY_TOL:
            return CONVERGES
        return DIVERGES

    def params(self) -> dict:
        return {"exponent": self.exponent, "amplitude": self.amplitude}


@dataclass(frozen=True)
class LogPower(TailModel):
    """u_i = amplitude * (i+offset)^-p * ln(i+offset)^-q.

    Bertrand-series rules decide every weighted sum, which is what makes the
    log-damped harmonic family (p=1, q=1) classifiable: sum k u_k^2 converges
    while sum u_k diverges.
    """

    exponent: float
    log_exponent: float
    amplitude: float = 1.0
    offset: float = 2.0
    kind = "log_power"

    def __post_init__(self) -> None:
        _require(self.exponent >= 0.0, "log-power exponent must be >= 0")
        _require(self.offset > 1.0, f"log-power offset must exceed 1, got {self.offset}")
        _require(self.amplitude >= 0.0, "log-power amplitude must be >= 0")

    def term(self, i: int) -> float:
        x = i + self.offset
        return self.amplitude * x**-self.exponent * math.log(x) ** -self.log_exponent

    def terms(self, start: int, stop: int) -> np.ndarray:
        x = np.arange(start, stop, dtype=float) + self.offset
        return self.amplitude * x**-self.exponent * np.log(x) ** -self.log_exponent

    @staticmethod
    def _bertrand(alpha: float, beta: float) -> str:
        if alpha > 1.0 + _BOUNDARY_TOL:
            return CONVERGES
        if alpha < 1.0 - _BOUNDARY_TOL:
            return DIVERGES
        return CONVERGES if beta > 1.0 + _BOUNDARY_TOL else DIVERGES

    def power_tail(self, k: int, m: float) -> float:
        if self.amplitude == 0.0:
            return 0.0
        alpha = m * self.exponent
        beta = m * self.log_exponent
        if self._bertrand(alpha, beta) is DIVERGES:
            return math.inf

        def h(x: float) -> float:
            y = x + self.offset
            return y**-alpha * math.log(y) ** -beta

        def h_prime(x: float) -> float:
            y = x + self.offset
            return -h(x) * (alpha / y + beta / (y * math.log(y)))

        k0 = max(k, 4096)
        head = math.fsum(float(t) for t in self.terms(k, k0) ** m) if k0 > k else 0.0
        # integral_{k0}^inf h: substitute t = ln(x+offset). For alpha > 1 this
        # is e^{(1-alpha)a} / (alpha-1) * integral_0^inf e^{-s} phi(s) ds with
        # phi slowly varying, which Gauss-Laguerre nails; alpha == 1 (then
        # beta > 1) has the closed form a^{1-beta}/(beta-1).
        a = math.log(k0 + self.offset)
        if abs(alpha - 1.0) <= _BOUNDARY_TOL:
            integral = a ** (1.0 - beta) / (beta - 1.0)
        else:
            s, w = _laguerre_nodes()
            phi = (a + s / (alpha - 1.0)) ** -beta
            integral = math.exp((1.0 - alpha) * a) / (alpha - 1.0) * float(np.dot(w, phi))
        # Euler-Maclaurin for sum_{i>=k0} h(i); the dropped h''' term is
        # O(h(k0)/k0^3) which is far below double precision here.
        rest = integral + h(k0) / 2.0 - h_prime(k0) / 12.0
        return head + abs(self.amplitude) ** m * rest

    def classify_weighted(self, s: float, m: float) -> str:
        if self.amplitude == 0.0:
            return CONVERGES
        return self._bertrand(m * self.exponent - s, m * self.log_exponent)

    def classify_mw(self) -> str:
        if self.amplitude == 0.0:
            return CONVERGES
        if 2.0 * self.exponent <= 1.0 + _BOUNDARY_TOL and not (
            abs(2.0 * self.exponent - 1.0) <= _BOUNDARY_TOL and 2.0 * self.log_exponent > 1.0
        ):
            return DIVERGES  # tail_l2 itself is infinite
        # tail_l2(k) ~ k^{1-2p} ln^{-2q} k, so the summand ~ k^-p ln^-q k.
        return self._bertrand(self.exponent, self.log_exponent)

    def classify_lemma(self, q: float) -> str:
        if self.amplitude == 0.0:
            return CONVERGES
        if self._bertrand(q * self.exponent, q * self.log_exponent) is DIVERGES:
            return DIVERGES
        return self._bertrand(self.exponent, self.log_exponent)

    def params(self) -> dict:
        return {
            "exponent": self.exponent,
            "log_exponent": self.log_exponent,
            "amplitude": self.amplitude,
            "offset": self.offset,
        }


@dataclass(frozen=True)
class Custom(TailModel):
    """User-supplied terms with an optional certified bound on squared tails.

    ``tail_bound(k)`` must satisfy sum_{i>=k} u_i^2 <= tail_bound(k). No
    convergence classification is ever derived from a Custom model: pointwise
    term values and a pointwise tail bound cannot decide the derived series,
    so every check returns ``Unknown``.
    """

    term_fn: Callable[[int], float] | None = None
    tail_bound: Callable[[int], float] | None = None
    kind = "custom"

    def term(self, i: int) -> float:
        return float(self.term_fn(i)) if self.term_fn is not None else 0.0

    def power_tail(self, k: int, m: float) -> float:
        raise SequenceError(
            "custom sequences have no exact tail sums; "
            "use tail_l2 to obtain a (partial sum, certified bound) pair"
        )

    def classify_weighted(self, s: float, m: float) -> str:
        return UNKNOWN

    def classify_mw(self) -> str:
        return UNKNOWN

    def classify_lemma(self, q: float) -> str:
        return UNKNOWN


# ---------------------------------------------------------------------------
# Coefficient sequences
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoefficientSequence:
    """A real sequence: explicit prefix values plus a tail model beyond them.

    ``prefix`` holds u_0..u_M and overrides the model there; ``tail``
    describes every u_i with i > M. Signed prefixes are allowed (linear-model
    coefficients); the condition checks use |u_i|.
    """

    prefix: tuple[float, ...]
    tail: TailModel
    nonnegative: bool = True

    def __post_init__(self) -> None:
        if self.nonnegative and any(v < 0 for v in self.prefix):
            raise SequenceError("sequence flagged nonnegative has a negative prefix entry")

    # -- term access --------------------------------------------------------

    def term(self, i: int) -> float:
        if i < 0:
            raise SequenceError(f"negative index {i}")
        if i < len(self.prefix):
            return self.prefix[i]
        return self.tail.term(i)

    def terms(self, n: int) -> np.ndarray:
        """First n terms u_0..u_{n-1}."""
        m = len(self.prefix)
        out = self.tail.terms(0, n)
        head = min(m, n)
        if head:
            out[:head] = self.prefix[:head]
        return out

    # -- exact tail sums -----------------------------------------------------

    def tail_power(self, k: int, m: float) -> float:
        """Exact sum_{i>=k} |u_i|^m (fsum over the prefix, closed form beyond)."""
        _require(k >= 0, f"tail index must be >= 0, got {k}")
        mlen = len(self.prefix)
        head = math.fsum(abs(v) ** m for v in self.prefix[k:]) if k < mlen else 0.0
        return head + self.tail.power_tail(max(k, mlen), m)

    @property
    def is_custom(self) -> bool:
        return isinstance(self.tail, Custom)

    def scaled_abs(self, factor: float) -> "CoefficientSequence":
        """The sequence (|u_i| * factor), preserving the analytic tail family."""
        factor = abs(float(factor))
        prefix = tuple(abs(v) * factor for v in self.prefix)
        t = self.tail
        if isinstance(t, FiniteSupport):
            tail: TailModel = t
        elif isinstance(t, Geometric):
            tail = Geometric(t.ratio, abs(t.amplitude) * factor)
        elif isinstance(t, PowerLaw):
            tail = PowerLaw(t.exponent, t.amplitude * factor)
        elif isinstance(t, DyadicSpikes):
            tail = DyadicSpikes(t.exponent, abs(t.amplitude) * factor)
        elif isinstance(t, LogPower):
            tail = LogPower(t.exponent, t.log_exponent, t.amplitude * factor, t.offset)
        elif isinstance(t, Custom):
            fn = t.term_fn
            bound = t.tail_bound
            tail = Custom(
                term_fn=(None if fn is None else (lambda i, f=fn, c=factor: abs(f(i)) * c)),
                tail_bound=(None if bound is None else (lambda k, b=bound, c=factor: b(k) * c * c)),
            )
        else:  # pragma: no cover
            raise SequenceError(f"cannot scale tail model {t.kind}")
        return CoefficientSequence(prefix, tail, nonnegative=True)

    # -- serialization -------------------------------------------------------

    def to_json(self) -> dict:
        if isinstance(self.tail, Custom):
            raise SequenceError("custom tail models are not JSON-serializable")
        return {
            "prefix": list(self.prefix),
            "tail": {"kind": self.tail.kind, "params": self.tail.params()},
        }


_TAIL_KINDS: dict[str, Callable[..., TailModel]] = {
    "finite": FiniteSupport,
    "geometric": Geometric,
    "power_law": PowerLaw,
    "dyadic_spikes": DyadicSpikes,
    "log_power": LogPower,
    "custom": Custom,
}


def sequence_from_json(doc: dict) -> CoefficientSequence:
    prefix = tuple(float(v) for v in doc.get("prefix", ()))
    tail_doc = doc.get("tail", {"kind": "finite", "params": {}})
    kind = tail_doc.get("kind")
    if kind not in _TAIL_KINDS:
        raise SequenceError(f"unknown tail kind {kind!r}")
    tail = _TAIL_KINDS[kind](**tail_doc.get("params", {}))
    return CoefficientSequence(prefix, tail, nonnegative=all(v >= 0 for v in prefix))


# -- constructors ------------------------------------------------------------


def finite(values: Sequence[float]) -> CoefficientSequence:
    vals = tuple(float(v) for v in values)
    return CoefficientSequence(vals, FiniteSupport(), nonnegative=all(v >= 0 for v in vals))


def geometric(ratio: float, amplitude: float = 1.0) -> CoefficientSequence:
    return CoefficientSequence((), Geometric(ratio, amplitude), nonnegative=amplitude >= 0)


def power_law(exponent: float, amplitude: float = 1.0) -> CoefficientSequence:
    return CoefficientSequence((), PowerLaw(exponent, amplitude))


def dyadic_spikes(exponent: float, amplitude: float = 1.0) -> CoefficientSequence:
    return CoefficientSequence((), DyadicSpikes(exponent, amplitude))


def log_power(
    exponent: float, log_exponent: float, amplitude: float = 1.0, offset: float = 2.0
) -> CoefficientSequence:
    return CoefficientSequence((), LogPower(exponent, log_exponent, amplitude, offset))


def custom(
    term: Callable[[int], float] | None,
    tail_bound: Callable[[int], float] | None = None,
    nonnegative: bool = False,
) -> CoefficientSequence:
    return CoefficientSequence((), Custom(term, tail_bound), nonnegative=nonnegative)


def counterexample_sequence(b: float) -> CoefficientSequence:
    """The dyadic-spike sequence u_{2^k} = 2^{-k/2} k^{-b}, zero elsewhere.

    Defined for b strictly inside (1/2, 1); there sum u_i and sum i u_i^2 are
    finite but the strong Maxwell-Woodroofe sum is not.
    """
    return dyadic_spikes(b)


# ---------------------------------------------------------------------------
# tail_l2
# ---------------------------------------------------------------------------

#: Result of tail_l2 on a Custom sequence: a partial sum over the terms that
#: are explicitly known plus a certified upper bound on everything beyond.
from collections import namedtuple  # noqa: E402  (kept local to its single use)

CustomTail = namedtuple("CustomTail", ["partial_sum", "remainder_bound"])

_CUSTOM_WORK_LIMIT = 4096


def tail_l2(seq: CoefficientSequence, k: int) -> float | CustomTail:
    """sum_{i>=k} u_i^2.

    Exact for the analytic tail families. For Custom sequences with a
    certified tail bound the result is a :class:`CustomTail` pair
    ``(partial_sum, remainder_bound)`` with the true value inside
    ``[partial_sum, partial_sum + remainder_bound]``; without a bound the
    demand for an exact value is rejected.
    """
    _require(k >= 0, f"tail index must be >= 0, got {k}")
    if not seq.is_custom:
        return seq.tail_power(k, 2.0)
    tail: Custom = seq.tail  # type: ignore[assignment]
    if tail.tail_bound is None:
        raise SequenceError("custom sequence has no certified tail bound; tail_l2 is undefined")
    stop = max(len(seq.prefix), k + _CUSTOM_WORK_LIMIT)
    partial = math.fsum(float(t) ** 2 for t in (seq.term(i) for i in range(k, stop)))
    bound = float(tail.tail_bound(stop))
    # 1-ulp-per-term inflation so the bound stays certified in floating point.
    bound *= 1.0 + (stop - k) * np.finfo(float).eps
    return CustomTail(partial, bound)


# ---------------------------------------------------------------------------
# Condition verdicts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConditionVerdict:
    """Outcome of one summability check.

    ``partial_sums`` is a (cutoff N, sum over k < N) grid on dyadic cutoffs;
    ``certified`` is True exactly when the classification came from the
    analytic tail model.
    """

    condition: str
    classification: str
    partial_sums: tuple[tuple[int, float], ...]
    certified: bool

    def __post_init__(self) -> None:
        if self.classification != UNKNOWN and not self.certified:
            raise SequenceError("non-Unknown classification requires certification")

    def to_json(self) -> dict:
        return {
            "condition": self.condition,
            "classification": self.classification,
            "certified": self.certified,
            "partial_sums": [[int(n), float(v)] for n, v in self.partial_sums],
        }

    def csv_rows(self) -> list[tuple]:
        """Rows (condition, classification, N, partial_sum, certified)."""
        if not self.partial_sums:
            return [(self.condition, self.classification, 0, float("nan"), self.certified)]
        return [
            (self.condition, self.classification, int(n), float(v), self.certified)
            for n, v in self.partial_sums
        ]


def _grid_for(seq: CoefficientSequence, grid: Sequence[int] | None) -> tuple[int, ...]:
    if grid is not None:
        return tuple(sorted(set(int(g) for g in grid)))
    if seq.is_custom:
        # Custom terms are evaluated one Python call at a time; cap the grid.
        return tuple(g for g in DEFAULT_GRID if g <= 2**16)
    return DEFAULT_GRID


def _partial_sums(terms: np.ndarray, cutoffs: Sequence[int]) -> tuple[tuple[int, float], ...]:
    cs = np.cumsum(terms)
    out = []
    for n in cutoffs:
        n = min(n, len(terms))
        out.append((int(n), float(cs[n - 1]) if n > 0 else 0.0))
    return tuple(out)


def _suffix_power_sums(seq: CoefficientSequence, m: float, n_max: int) -> np.ndarray | None:
    """T[k] = sum_{i>=k} |u_i|^m for k = 0..n_max, or None when unbounded/unknown.

    Uses a reversed cumulative sum over the first n_max+1 terms plus one exact
    far-tail evaluation beyond them.
    """
    u = np.abs(seq.terms(n_max + 1)) ** m
    if seq.is_custom:
        far = 0.0  # lower-bound diagnostic only; verdict stays Unknown
    else:
        far = seq.tail_power(n_max + 1, m)
        if not math.isfinite(far):
            return None
    return np.cumsum(u[::-1])[::-1] + far


def check_gl(seq: CoefficientSequence, grid: Sequence[int] | None = None) -> ConditionVerdict:
    """Decide sum_k k u_k^2 < inf (projection form of the Gordin-Lifsic condition)."""
    cutoffs = _grid_for(seq, grid)
    n_max = max(cutoffs)
    u = seq.terms(n_max)
    terms = np.arange(n_max, dtype=float) * u * u
    cls = seq.tail.classify_weighted(1.0, 2.0)
    return ConditionVerdict("GL", cls, _partial_sums(terms, cutoffs), cls != UNKNOWN)


def check_h(seq: CoefficientSequence, grid: Sequence[int] | None = None) -> ConditionVerdict:
    """Decide sum_k |u_k| < inf (Hannan)."""
    cutoffs = _grid_for(seq, grid)
    terms = np.abs(seq.terms(max(cutoffs)))
    cls = seq.tail.classify_weighted(0.0, 1.0)
    return ConditionVerdict("H", cls, _partial_sums(terms, cutoffs), cls != UNKNOWN)


def check_mw(seq: CoefficientSequence, grid: Sequence[int] | None = None) -> ConditionVerdict:
    """Decide sum_{k>=1} k^{-1/2} sqrt(sum_{i>=k} u_i^2) < inf."""
    cutoffs = _grid_for(seq, grid)
    n_max = max(cutoffs)
    cls = seq.tail.classify_mw()
    tails = _suffix_power_sums(seq, 2.0, n_max)
    if tails is None:
        # Squared tails are already infinite: the series diverges outright.
        return ConditionVerdict("MWstrong", DIVERGES, (), True)
    k = np.arange(n_max + 1, dtype=float)
    terms = np.zeros(n_max + 1)
    terms[1:] = np.sqrt(tails[1:]) / np.sqrt(k[1:])
    return ConditionVerdict("MWstrong", cls, _partial_sums(terms, cutoffs), cls != UNKNOWN)


def lemma_series_lhs(
    seq: CoefficientSequence, q: float = 2.0, grid: Sequence[int] | None = None
) -> ConditionVerdict:
    """Evaluate and classify sum_{k>0} (k^{-1} sum_{i>=k} |u_i|^q)^{1/q}.

    Finiteness of this series forces sum u_k < inf, and for nonincreasing
    sequences the two are equivalent; both directions are asserted against
    the certified classifications as an internal consistency check.
    """
    _require(q > 1.0, f"lemma exponent q must exceed 1, got {q}")
    cutoffs = _grid_for(seq, grid)
    n_max = max(cutoffs)
    cls = seq.tail.classify_lemma(q)
    name = f"LemmaSeriesLHS(q={q:g})"
    tails = _suffix_power_sums(seq, q, n_max)
    if tails is None:
        return ConditionVerdict(name, DIVERGES, (), True)
    k = np.arange(n_max + 1, dtype=float)
    terms = np.zeros(n_max + 1)
    terms[1:] = (tails[1:] / k[1:]) ** (1.0 / q)
    verdict = ConditionVerdict(name, cls, _partial_sums(terms, cutoffs), cls != UNKNOWN)
    if verdict.certified:
        h = seq.tail.classify_weighted(0.0, 1.0)
        if verdict.classification == CONVERGES and h == DIVERGES:
            raise AssertionError(
                "internal inconsistency: finite lemma series with divergent term sum"
            )
    return verdict


# ---------------------------------------------------------------------------
# Quadrature for the dependence-integral criterion
# ---------------------------------------------------------------------------

_GL_ORDER = 16
_gl_nodes, _gl_weights = np.polynomial.legendre.leggauss(_GL_ORDER)


def rio_integral(
    alpha_k: float, quantile: Callable[[np.ndarray], np.ndarray], nodes: int = 4096
) -> float:
    """integral_0^{alpha_k} Q(u)^2 du for a nonincreasing quantile function Q.

    Composite Gauss-Legendre on dyadically shrinking subintervals toward 0,
    where Q may blow up. The geometric extrapolation of the level sums is
    exact for pure power singularities. Returns ``inf`` when the level
    contributions stop decaying (non-integrable singularity).
    """
    _require(0.0 <= alpha_k <= 1.0, f"alpha must lie in [0,1], got {alpha_k}")
    if alpha_k == 0.0:
        return 0.0
    levels = int(min(max(nodes // _GL_ORDER, 8), 64))
    contributions = np.empty(levels)
    for m in range(levels):
        hi = alpha_k * 2.0**-m
        lo = hi / 2.0
        x = 0.5 * (hi - lo) * _gl_nodes + 0.5 * (hi + lo)
        qx = np.asarray(quantile(x), dtype=float)
        contributions[m] = 0.5 * (hi - lo) * float(np.dot(_gl_weights, qx * qx))
    tail = contributions[-6:]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = tail[1:] / tail[:-1]
    ratios = ratios[np.isfinite(ratios)]
    if len(ratios) and float(np.max(ratios)) >= 0.98:
        return math.inf
    total = math.fsum(contributions.tolist())
    if len(ratios):
        rho = float(np.exp(np.mean(np.log(np.maximum(ratios, 1e-300)))))
        if 0.0 < rho < 1.0 and tail[-1] > 0.0:
            total += tail[-1] * rho / (1.0 - rho)
    return total


def rio_sum(
    alphas: Sequence[float],
    quantile: Callable[[np.ndarray], np.ndarray],
    nodes: int = 4096,
) -> ConditionVerdict:
    """Partial sums of sum_k integral_0^{alpha(k)} Q^2.

    Purely diagnostic: the alpha values are data, not an analytic model, so
    the classification is always Unknown.
    """
    terms = np.array([rio_integral(a, quantile, nodes) for a in alphas])
    cutoffs = tuple(n for n in DEFAULT_GRID if n <= len(terms)) or (len(terms),)
    return ConditionVerdict("RioSum", UNKNOWN, _partial_sums(terms, cutoffs), False)


def verdicts_to_json(verdicts: Sequence[ConditionVerdict]) -> str:
    return json.dumps([v.to_json() for v in verdicts], indent=2)
