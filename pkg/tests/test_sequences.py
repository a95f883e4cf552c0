"""Sequence tail sums, condition verdicts, and the dependence-integral quadrature.

Expected values are produced by independent brute-force oracles inside the
tests (finite sums via math.fsum, closed-form antiderivatives), never by the
code paths under test.
"""

import json
import math

import numpy as np
import pytest

from stationlab import sequences as sq


def brute_power_tail(seq, k, m, n_star):
    """Independent oracle: plain fsum of |u_i|^m over i in [k, n_star)."""
    return math.fsum(abs(seq.term(i)) ** m for i in range(k, n_star))


class TestTailL2:
    def test_single_term_finite_support(self):
        assert sq.tail_l2(sq.finite([1.0]), 0) == 1.0
        assert sq.tail_l2(sq.finite([1.0]), 1) == 0.0

    def test_geometric_half_closed_form(self):
        seq = sq.geometric(0.5)
        # oracle: 64-term brute force of sum_{i>=1} 4^-i
        brute = math.fsum(4.0**-i for i in range(1, 65))
        val = sq.tail_l2(seq, 1)
        assert val == pytest.approx(brute, rel=1e-15)
        assert val == pytest.approx(1.0 / 3.0, rel=1e-15)

    @pytest.mark.parametrize("ell", [2, 3, 5, 8])
    def test_dyadic_tail_at_block_boundaries(self, ell):
        b = 0.75
        seq = sq.dyadic_spikes(b)
        k = 2**ell + 1
        # oracle: brute-force dyadic sum to j = 60
        brute = math.fsum(2.0**-j * j ** (-2 * b) for j in range(ell + 1, 61))
        assert sq.tail_l2(seq, k) == pytest.approx(brute, rel=1e-13)

    @pytest.mark.parametrize(
        "seq,n_star",
        [
            (sq.geometric(0.5), 4096),
            (sq.power_law(1.5), 1 << 16),
            (sq.dyadic_spikes(0.75), 1 << 16),
            (sq.log_power(1.0, 1.0), 1 << 16),
            (sq.finite([1.0, -2.0, 0.5]), 64),
        ],
    )
    def test_matches_brute_force_within_certified_tail(self, seq, n_star):
        ks = [0, 1, 2, 3, 5, 17, 100, 1024]
        prev = math.inf
        for k in ks:
            val = sq.tail_l2(seq, k)
            assert val <= prev + 1e-15  # nonincreasing in k
            prev = val
            brute = brute_power_tail(seq, k, 2, n_star)
            leftover = seq.tail_power(n_star, 2.0)
            assert brute - 1e-12 <= val <= brute + leftover + 1e-12 + 1e-12 * brute

    def test_custom_requires_bound(self):
        seq = sq.custom(lambda i: 2.0**-i)
        with pytest.raises(sq.SequenceError):
            sq.tail_l2(seq, 0)

    def test_custom_with_bound_brackets_truth(self):
        seq = sq.custom(lambda i: 2.0**-i, tail_bound=lambda k: 4.0**-k * 4.0 / 3.0)
        got = sq.tail_l2(seq, 1)
        assert isinstance(got, sq.CustomTail)
        assert got.partial_sum <= 1.0 / 3.0 <= got.partial_sum + got.remainder_bound


class TestVerdicts:
    def test_gl_examples(self):
        assert sq.check_gl(sq.geometric(0.5), grid=(64,)).classification == sq.CONVERGES
        assert sq.check_gl(sq.dyadic_spikes(0.75), grid=(64,)).classification == sq.CONVERGES
        v = sq.check_gl(sq.power_law(1.0), grid=(2**16, 2**17))
        assert v.classification == sq.DIVERGES
        # oracle: partial sums of sum k/(k+1)^2 exceed 10 by N = 1e5
        brute = math.fsum(k / (k + 1) ** 2 for k in range(100_000))
        assert brute > 10.0
        assert dict(v.partial_sums)[2**17] > 10.0

    def test_h_examples(self):
        assert sq.check_h(sq.dyadic_spikes(0.75)).classification == sq.CONVERGES
        assert sq.check_h(sq.power_law(1.0)).classification == sq.DIVERGES
        v = sq.check_h(sq.power_law(1.5))
        assert v.classification == sq.CONVERGES
        # oracle: by N=1e6 successive partial sums agree to 3 decimals and sit
        # within the integral-test remainder 2/sqrt(N) of zeta(3/2)
        from scipy.special import zeta

        ps = dict(v.partial_sums)
        assert abs(ps[2**20] - ps[2**19]) < 1e-3
        assert 0 < float(zeta(1.5)) - ps[2**20] < 2.1 / math.sqrt(2**20)

    def test_mw_examples(self):
        assert sq.check_mw(sq.geometric(0.5)).classification == sq.CONVERGES
        assert sq.check_mw(sq.dyadic_spikes(0.75)).classification == sq.DIVERGES
        assert sq.check_mw(sq.finite([1.0, 1.0])).classification == sq.CONVERGES

    def test_log_power_divergent_harmonic_family(self):
        seq = sq.log_power(1.0, 1.0)  # u_k = 1/((k+2) ln(k+2))
        assert sq.check_gl(seq).classification == sq.CONVERGES
        assert sq.check_h(seq).classification == sq.DIVERGES
        assert sq.check_mw(seq).classification == sq.DIVERGES

    def test_custom_unknown_uncertified(self):
        seq = sq.custom(lambda i: 1.0 / (i + 1.0) ** 2, nonnegative=True)
        for checker in (sq.check_gl, sq.check_h, sq.check_mw):
            v = checker(seq)
            assert v.classification == sq.UNKNOWN
            assert not v.certified

    def test_partial_sums_nondecreasing(self):
        for seq in (sq.geometric(0.3), sq.power_law(0.8), sq.dyadic_spikes(0.6)):
            for checker in (sq.check_gl, sq.check_h, sq.check_mw):
                v = checker(seq, grid=[2**j for j in range(4, 15)])
                vals = [x for _, x in v.partial_sums]
                assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))

    def test_mw_implies_gl_and_h(self):
        suite = [
            sq.geometric(0.5),
            sq.geometric(0.9),
            sq.power_law(0.8),
            sq.power_law(1.2),
            sq.power_law(2.0),
            sq.dyadic_spikes(0.6),
            sq.dyadic_spikes(0.75),
            sq.dyadic_spikes(0.9),
            sq.log_power(1.0, 1.0),
            sq.log_power(1.5, 0.0),
            sq.finite([3.0, 1.0, 0.25]),
        ]
        for seq in suite:
            mw = sq.check_mw(seq, grid=(64,))
            if mw.certified and mw.classification == sq.CONVERGES:
                assert sq.check_gl(seq, grid=(64,)).classification == sq.CONVERGES
                assert sq.check_h(seq, grid=(64,)).classification == sq.CONVERGES

    def test_dyadic_lattice_for_all_tested_exponents(self):
        for b in (0.6, 0.75, 0.9):
            seq = sq.dyadic_spikes(b)
            assert sq.check_gl(seq, grid=(256,)).classification == sq.CONVERGES
            assert sq.check_h(seq, grid=(256,)).classification == sq.CONVERGES
            assert sq.check_mw(seq, grid=(256,)).classification == sq.DIVERGES

    def test_verdict_invariant_rejects_uncertified_claims(self):
        with pytest.raises(sq.SequenceError):
            sq.ConditionVerdict("GL", sq.CONVERGES, (), certified=False)


class TestLemmaSeries:
    def test_power_three_halves(self):
        seq = sq.power_law(1.5)
        v = sq.lemma_series_lhs(seq, 2.0)
        assert v.classification == sq.CONVERGES
        assert sq.check_h(seq, grid=(64,)).classification == sq.CONVERGES
        # oracle: tail ~ k^-2 so the summand ~ k^-3/2; brute partial sums settle
        def summand(k, n_star=200_000):
            return (math.fsum((i + 1.0) ** -3.0 for i in range(k, n_star)) / k) ** 0.5

        assert summand(100) == pytest.approx(100.0**-1.5 / math.sqrt(2), rel=0.02)

    def test_harmonic(self):
        seq = sq.power_law(1.0)
        v = sq.lemma_series_lhs(seq, 2.0)
        assert v.classification == sq.DIVERGES
        assert sq.check_h(seq, grid=(64,)).classification == sq.DIVERGES

    def test_finite_support_trivial(self):
        v = sq.lemma_series_lhs(sq.finite([1.0]), 2.0)
        assert v.classification == sq.CONVERGES
        # the k=1 term is the only nonzero one and equals 0 (empty tail)
        assert dict(v.partial_sums)[16] == 0.0

    @pytest.mark.parametrize("q", [2.0, 3.0])
    @pytest.mark.parametrize("p", [0.8, 1.0, 1.5, 2.5])
    def test_monotone_equivalence(self, q, p):
        seq = sq.power_law(p)
        lhs = sq.lemma_series_lhs(seq, q, grid=(64,))
        h = sq.check_h(seq, grid=(64,))
        assert lhs.classification == h.classification

    def test_one_directional_on_dyadic(self):
        seq = sq.dyadic_spikes(0.75)
        assert sq.check_h(seq, grid=(64,)).classification == sq.CONVERGES
        assert sq.lemma_series_lhs(seq, 2.0, grid=(64,)).classification == sq.DIVERGES

    def test_rejects_bad_q(self):
        with pytest.raises(sq.SequenceError):
            sq.lemma_series_lhs(sq.geometric(0.5), 1.0)


class TestCounterexampleSequence:
    def test_term_values(self):
        seq = sq.counterexample_sequence(0.75)
        assert seq.term(4) == pytest.approx(0.5 * 2.0**-0.75, rel=1e-15)
        assert seq.term(3) == 0.0
        assert seq.term(0) == 0.0 and seq.term(1) == 0.0
        assert sq.counterexample_sequence(0.6).term(2) == pytest.approx(2.0**-0.5, rel=1e-15)

    @pytest.mark.parametrize("b", [0.5, 1.0, 0.0, 1.5])
    def test_rejects_bad_exponent(self, b):
        with pytest.raises(sq.SequenceError):
            sq.counterexample_sequence(b)

    def test_terms_vector_matches_scalar(self):
        seq = sq.counterexample_sequence(0.8)
        vec = seq.terms(40)
        for i in range(40):
            assert vec[i] == seq.term(i)


class TestRioIntegral:
    def test_constant_quantile(self):
        assert sq.rio_integral(0.5, lambda u: np.ones_like(u)) == pytest.approx(0.5, rel=1e-12)
        assert sq.rio_integral(0.0, lambda u: np.ones_like(u)) == 0.0

    def test_quarter_power_singularity(self):
        # oracle: integral of u^-1/2 has antiderivative 2 sqrt(u)
        val = sq.rio_integral(0.25, lambda u: u**-0.25)
        assert val == pytest.approx(2.0 * math.sqrt(0.25), rel=1e-8)

    def test_divergent_singularity_flagged(self):
        assert sq.rio_integral(0.5, lambda u: u**-0.5) == math.inf

    def test_monotone_in_alpha(self):
        q = lambda u: u**-0.25
        grid = np.linspace(0.05, 1.0, 20)
        vals = [sq.rio_integral(a, q) for a in grid]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_rejects_bad_alpha(self):
        with pytest.raises(sq.SequenceError):
            sq.rio_integral(1.5, lambda u: u)


class TestSerialization:
    @pytest.mark.parametrize(
        "seq",
        [
            sq.finite([1.0, -1.0]),
            sq.geometric(0.25, 2.0),
            sq.power_law(1.5, 0.5),
            sq.dyadic_spikes(0.75),
            sq.log_power(1.0, 1.0),
        ],
    )
    def test_roundtrip(self, seq):
        doc = json.loads(json.dumps(seq.to_json()))
        back = sq.sequence_from_json(doc)
        np.testing.assert_array_equal(back.terms(100), seq.terms(100))

    def test_verdict_csv_rows(self):
        v = sq.check_gl(sq.geometric(0.5), grid=(16, 32))
        rows = v.csv_rows()
        assert rows[0][0] == "GL" and rows[0][1] == sq.CONVERGES
        assert [r[2] for r in rows] == [16, 32]

    def test_custom_not_serializable(self):
        with pytest.raises(sq.SequenceError):
            sq.custom(lambda i: 0.0).to_json()


class TestScaledAbs:
    def test_geometric_scaling_keeps_model(self):
        seq = sq.geometric(0.5, 1.0).scaled_abs(3.0)
        assert isinstance(seq.tail, sq.Geometric)
        assert sq.tail_l2(seq, 1) == pytest.approx(9.0 / 3.0, rel=1e-14)

    def test_signed_prefix_becomes_abs(self):
        seq = sq.finite([1.0, -2.0]).scaled_abs(2.0)
        assert seq.prefix == (2.0, 4.0)
        assert seq.nonnegative
