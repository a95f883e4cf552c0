"""Gordin increments, approximation functionals, and the criteria statistics.

Independent oracles used here: telescoping identities, exhaustive enumeration
over sign patterns for tiny horizons, and direct covariance expansions.
"""

import itertools
import math

import numpy as np
import pytest

import stationlab as sl
from stationlab import martingale as mg
from stationlab import sequences as sq


@pytest.fixture
def rademacher():
    return sl.rademacher_space()


@pytest.fixture
def iid(rademacher):
    return sl.CausalLinearModel(sq.finite([1.0]), rademacher, model_id="iid")


@pytest.fixture
def coboundary(rademacher):
    return sl.CausalLinearModel(sq.finite([1.0, -1.0]), rademacher, model_id="cob")


@pytest.fixture
def geometric(rademacher):
    return sl.CausalLinearModel(sq.geometric(0.5), rademacher, model_id="rho12")


class TestGordinIncrement:
    def test_iid(self, iid):
        d = sl.gordin_increment(iid, 10)
        assert d.coefficient == 1.0
        assert d.norm2 == 1.0
        assert d.limit_exists is True

    def test_geometric_truncation_forty(self, rademacher):
        m = sl.CausalLinearModel(sq.geometric(0.5), rademacher, lag=64, model_id="rho12")
        d = sl.gordin_increment(m, 40)
        assert d.coefficient == pytest.approx(2.0 - 2.0**-40, rel=1e-15)
        assert d.norm2 == pytest.approx(2.0, rel=1e-11)

    def test_coboundary_cancels(self, coboundary):
        d = sl.limit_increment(coboundary)
        assert d.coefficient == 0.0
        assert d.norm2 == 0.0

    def test_cauchy_diagnostics_shrink(self, geometric):
        d = sl.gordin_increment(geometric, 16)
        gaps = [g for _, g in d.cauchy]
        assert all(b < a for a, b in zip(gaps, gaps[1:]) if a > 0)

    def test_divergent_sum_flagged(self, rademacher):
        m = sl.CausalLinearModel(sq.log_power(1.0, 1.0), rademacher, lag=256, model_id="div")
        d = sl.limit_increment(m)
        assert d.limit_exists is False

    def test_semilinear_matches_linear(self, geometric):
        sm = sl.linear_as_semilinear(geometric)
        dl = sl.gordin_increment(geometric, 12)
        ds = sl.gordin_increment(sm, 12)
        assert ds.norm2 == pytest.approx(dl.norm2, rel=1e-14)
        assert ds.limit_exists is True


class TestMaErrorExact:
    def test_iid_is_its_own_martingale(self, iid):
        d = sl.limit_increment(iid)
        for n in (1, 2, 64, 4096):
            assert sl.ma_error_exact(iid, d, n) == 0.0

    def test_coboundary_closed_form(self, coboundary):
        d = sl.limit_increment(coboundary)  # D = 0
        for n in (1, 2, 8, 1024, 65536):
            assert sl.ma_error_exact(coboundary, d, n) == pytest.approx(2.0 / n, rel=1e-12)

    def test_geometric_against_brute_coordinates(self, rademacher):
        m = sl.CausalLinearModel(sq.geometric(0.5), rademacher, lag=20)
        d = sl.limit_increment(m)
        c = d.coefficient
        for n in (1, 5, 64, 300):
            # oracle: explicit loop over coordinate windows with D subtracted
            L, a = m.lag, m.a
            total = 0.0
            for mm in range(1 - L, n + 1):
                w = math.fsum(a[j] for j in range(max(1, mm) - mm, min(L, n - mm) + 1))
                if 1 <= mm <= n:
                    w -= c
                total += w * w
            assert sl.ma_error_exact(m, d, n) == pytest.approx(total / n, rel=1e-12)

    def test_decay_rate_is_one_over_n(self, geometric):
        d = sl.limit_increment(geometric)
        e_small = sl.ma_error_exact(geometric, d, 2**6)
        e_large = sl.ma_error_exact(geometric, d, 2**14)
        assert e_small / e_large == pytest.approx(2**8, rel=0.05)

    def test_lemma_decay_with_horizon_truncations(self, geometric):
        # D_n = increment truncated at n itself; the normalised error vanishes
        vals = []
        for n in [2**j for j in range(6, 17, 2)]:
            dn = sl.gordin_increment(geometric, n)
            vals.append(sl.ma_error_exact(geometric, dn, n))
        assert all(b < a for a, b in zip(vals, vals[1:]))
        assert vals[-1] < vals[0] / 10.0

    def test_lemma_decay_dyadic_coefficients(self, rademacher):
        m = sl.CausalLinearModel(sq.dyadic_spikes(0.75), rademacher, lag=1 << 16, model_id="dy")
        vals = []
        for n in [2**j for j in range(6, 17, 2)]:
            dn = sl.gordin_increment(m, n)
            vals.append(sl.ma_error_exact(m, dn, n))
        assert all(b < a for a, b in zip(vals, vals[1:]))
        assert vals[-1] < vals[0] / 10.0

    def test_orthogonality_identity(self, rademacher):
        # a process that is a pure one-coordinate shift family: S_n - 0 equals
        # sum g(omega_k), whose normalised squared norm is exactly ||g||^2
        g = np.array([[-0.7, 0.7]])
        sm = sl.SemiLinearModel(rademacher, g, model_id="ortho")
        zero = mg.MartingaleApproximant("ortho", "semilinear_function", 0, 0.0, d_values=(0.0, 0.0))
        for n in (1, 3, 17, 256):
            lhs = sl.ma_error_exact(sm, zero, n)
            assert lhs == pytest.approx(sm.weight(g[0]), rel=1e-14)

    def test_holder_rejected(self, geometric):
        hm = sl.HolderModel(
            sl.linear_as_semilinear(geometric), sl.abs_power(1.0), centering_replicates=10_000
        )
        d = sl.limit_increment(geometric)
        with pytest.raises(sl.ModelError):
            sl.ma_error_exact(hm, d, 16)
        with pytest.raises(sl.ModelError):
            sl.ma_error_mc(hm, d, 16, 100, 1)


class TestMaErrorMc:
    def test_iid_identically_zero(self, iid):
        d = sl.limit_increment(iid)
        e = sl.ma_error_mc(iid, d, 64, 500, 3)
        assert e.value == 0.0
        assert e.se == 0.0

    def test_exhaustive_enumeration_oracle(self, rademacher):
        # coboundary, D = 0, maximal functional at n = 8: enumerate all 2^9
        # sign patterns of (eps_0, ..., eps_8)
        model = sl.CausalLinearModel(sq.finite([1.0, -1.0]), rademacher, model_id="cob")
        zero = sl.limit_increment(model)
        n = 8
        exact = 0.0
        for signs in itertools.product((-1.0, 1.0), repeat=n + 1):
            path = [signs[k] - signs[0] for k in range(1, n + 1)]
            exact += max(x * x for x in path)
        exact /= (2 ** (n + 1)) * n
        est = sl.ma_error_mc(model, zero, n, 40_000, 11, maximal=True)
        assert est.value == pytest.approx(exact, abs=4 * est.se)
        # and the documented coarse bound
        assert est.value <= 4.0 * (2.0 + 1.0) / n

    @pytest.mark.parametrize("n", [2**6, 2**10])
    def test_agrees_with_exact(self, geometric, n):
        d = sl.limit_increment(geometric)
        exact = sl.ma_error_exact(geometric, d, n)
        est = sl.ma_error_mc(geometric, d, n, 10_000, 29)
        assert abs(est.value - exact) < 4 * est.se

    def test_maximal_dominates_plain(self, geometric):
        d = sl.limit_increment(geometric)
        plain = sl.ma_error_mc(geometric, d, 256, 2000, 5)
        maximal = sl.ma_error_mc(geometric, d, 256, 2000, 5, maximal=True)
        assert maximal.value >= plain.value
        assert maximal.functional == "MMA" and plain.functional == "MA"

    def test_quenched_reduced_past_independent(self, geometric):
        sm = sl.linear_as_semilinear(geometric)
        d = sl.limit_increment(sm)
        pasts = sl.draw_pasts(sm, 4, 77)
        entries = [
            sl.ma_error_mc(sm, d, 512, 4000, 13, past=p, remove_drift=True) for p in pasts
        ]
        assert all(e.functional == "MA0" for e in entries)
        for i in range(len(entries)):
            for j in range(i + 1, len(entries)):
                gap = abs(entries[i].value - entries[j].value)
                assert gap <= 4 * math.hypot(entries[i].se, entries[j].se)

    def test_quenched_raw_contains_drift(self, geometric):
        sm = sl.linear_as_semilinear(geometric)
        d = sl.limit_increment(sm)
        past = sl.draw_pasts(sm, 1, 3)[0]
        n = 256
        raw = sl.ma_error_mc(sm, d, n, 20_000, 19, past=past)
        red = sl.ma_error_mc(sm, d, n, 20_000, 19, past=past, remove_drift=True)
        drift = sl.conditional_expectation_S(sm, n, past)
        # raw ~ reduced + drift^2/n (cross term vanishes in expectation)
        assert raw.value == pytest.approx(red.value + drift * drift / n, abs=5 * (raw.se + red.se))


class TestCriterion3:
    def test_iid_zero_for_all_depths(self, iid):
        for depth in (1, 2, 5):
            for n in (1, 10, 100):
                assert sl.criterion3_statistic(iid, depth, n) == 0.0

    def test_coboundary_depth_one_vanishes(self, coboundary):
        # pairings at depth 1 need lag >= 1 overlaps a_j a_{j+i} with i >= 1
        for n in (1, 2, 16, 512):
            assert sl.criterion3_statistic(coboundary, 1, n) == 0.0

    def test_geometric_closed_form(self, geometric):
        # oracle: gamma_N(i) = sum_{j>=N} 2^-j 2^-(i+j) = 2^-i 4^-N * 4/3
        L = geometric.lag
        for depth in (1, 3, 6):
            for n in (2, 17, 256):
                gamma = lambda i: 2.0**-i * (4.0**-depth) * (4.0 / 3.0) * (1 - 4.0 ** -(L - depth - i + 1))
                expect = sum((n - i) * gamma(i) for i in range(1, min(n - 1, L - depth) + 1)) / n
                got = sl.criterion3_statistic(geometric, depth, n)
                assert got == pytest.approx(expect, rel=1e-10)

    def test_grid_decreasing_in_depth(self, geometric):
        depths = list(range(1, 17))
        horizons = [2**j for j in range(4, 13, 2)]
        grid = mg.criterion3_grid(geometric, depths, horizons)
        for col in range(grid.shape[1]):
            col_vals = grid[:, col]
            assert all(b <= a + 1e-15 for a, b in zip(col_vals, col_vals[1:]))

    def test_semilinear_matches_linear(self, geometric):
        sm = sl.linear_as_semilinear(geometric)
        for depth in (1, 4):
            a = sl.criterion3_statistic(geometric, depth, 64)
            b = sl.criterion3_statistic(sm, depth, 64)
            assert b == pytest.approx(a, rel=1e-12)


class TestCpcond:
    def test_iid_zero_beyond_support(self, iid):
        for start in (1, 2, 10):
            assert sl.cpcond_statistic(iid, start) == 0.0

    def test_geometric_tail_value(self, rademacher):
        m = sl.CausalLinearModel(sq.geometric(0.5), rademacher, lag=40)
        got = sl.cpcond_statistic(m, 10)
        assert got == pytest.approx((2.0**-9) ** 2, rel=1e-7)

    def test_dyadic_sequence_decreases_to_zero(self, rademacher):
        m = sl.CausalLinearModel(sq.dyadic_spikes(0.75), rademacher, lag=1 << 14, model_id="dy")
        vals = [sl.cpcond_statistic(m, 2**j) for j in range(1, 12)]
        assert all(b <= a for a, b in zip(vals, vals[1:]))
        assert vals[-1] < vals[0] / 10

    def test_divergent_flagged_infinite(self, rademacher):
        m = sl.CausalLinearModel(sq.log_power(1.0, 1.0), rademacher, lag=128)
        assert sl.cpcond_statistic(m, 4) == math.inf

    def test_semilinear_pointwise_sup(self, geometric):
        sm = sl.linear_as_semilinear(geometric)
        a = sl.cpcond_statistic(geometric, 5)
        b = sl.cpcond_statistic(sm, 5)
        assert b == pytest.approx(a, rel=1e-12)


class TestHolderGordinEstimate:
    def test_matches_linear_truth_through_soft_identity(self, geometric):
        # soft_clip with a huge scale is the identity on the support of Y,
        # so ||D||^2 must match the linear oracle (sum a_k)^2
        base = sl.linear_as_semilinear(geometric)
        hm = sl.HolderModel(base, sl.soft_clip(1e6), centering_replicates=10_000, validate=False)
        est = mg.estimate_gordin_norm2(hm, replicates=1 << 14, master_seed=5)
        truth = sl.limit_increment(geometric).norm2 ** 2
        assert est.norm2sq == pytest.approx(truth, abs=4 * est.norm2sq_se + 1e-6)
