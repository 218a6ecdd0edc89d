"""Effective-sample-size estimator, percentiles and histograms against
analytic oracles."""

import math

import numpy as np
import pytest

from damcmc.diagnostics import (
    acceptance_percentiles,
    histogram,
    mcse,
    multi_ess,
    thin_indices,
)
from damcmc.errors import EmptyInput, NoPromotions


class TestMultiEss:
    def test_iid_normal(self):
        rng = np.random.default_rng(0)
        draws = rng.standard_normal((10_000, 3))
        rep = multi_ess(draws)
        assert rep.multi_ess == pytest.approx(10_000, rel=0.10)
        assert rep.batch_size == 100
        assert rep.n_batches == 100

    def test_ar1_autocorrelation_time(self):
        # AR(1) with rho = 0.5: ESS/n -> (1 - rho) / (1 + rho) = 1/3.
        rng = np.random.default_rng(1)
        n, rho = 50_000, 0.5
        innov = rng.standard_normal(n) * math.sqrt(1 - rho**2)
        x = np.empty(n)
        x[0] = rng.standard_normal()
        for t in range(1, n):
            x[t] = rho * x[t - 1] + innov[t]
        rep = multi_ess(x[:, None])
        assert rep.multi_ess / n == pytest.approx(1 / 3, rel=0.15)

    def test_duplicated_draws_halve_ess(self):
        rng = np.random.default_rng(2)
        base = rng.standard_normal((5000, 2))
        rep_iid = multi_ess(base)
        doubled = np.repeat(base, 2, axis=0)
        rep_dup = multi_ess(doubled)
        assert rep_dup.multi_ess / rep_iid.multi_ess == pytest.approx(1.0, rel=0.20)

    def test_affine_invariance(self):
        rng = np.random.default_rng(3)
        draws = rng.standard_normal((8000, 4))
        rep = multi_ess(draws)
        for seed in range(5):
            a = np.random.default_rng(seed).uniform(-2, 2, size=(4, 4))
            a += 4 * np.eye(4)  # keep it comfortably invertible
            shifted = draws @ a.T + np.arange(4)
            rep_t = multi_ess(shifted)
            assert abs(rep_t.multi_ess - rep.multi_ess) / rep.multi_ess <= 1e-6

    def test_reversal_symmetry_when_batches_divide(self):
        rng = np.random.default_rng(4)
        draws = rng.standard_normal((10_000, 2))  # b = 100 divides n
        fwd = multi_ess(draws)
        rev = multi_ess(draws[::-1])
        assert rev.multi_ess == pytest.approx(fwd.multi_ess, rel=1e-12)

    def test_soft_upper_bound(self):
        rng = np.random.default_rng(5)
        rep = multi_ess(rng.standard_normal((10_000, 5)))
        assert rep.multi_ess <= 10_000 * 1.1

    def test_constant_column_is_rank_deficient(self):
        draws = np.random.default_rng(6).standard_normal((1000, 2))
        draws[:, 1] = 3.0
        rep = multi_ess(draws)
        assert math.isnan(rep.multi_ess)
        assert rep.rank_deficient
        assert "constant" in rep.diagnostic

    def test_too_few_draws(self):
        with pytest.raises(ValueError):
            multi_ess(np.zeros((7, 2)))

    def test_report_ratios(self):
        rng = np.random.default_rng(7)
        draws = rng.standard_normal((5000, 2))
        rep = multi_ess(draws, wall_clock_seconds=2.0)
        assert rep.ess_per_iter == rep.multi_ess / 5000
        assert rep.ess_per_second == rep.multi_ess / 2.0
        assert math.isnan(multi_ess(draws).ess_per_second)


class TestMcse:
    def test_iid_scaling(self):
        rng = np.random.default_rng(8)
        draws = rng.standard_normal((10_000, 2))
        err = mcse(draws)
        assert err.shape == (2,)
        assert np.all(err == pytest.approx(0.01, rel=0.2))


class TestAcceptancePercentiles:
    def test_all_ones(self):
        assert acceptance_percentiles(np.ones(50)) == (1.0, 1.0, 1.0)

    def test_linear_interpolation_hand_value(self):
        vals = np.arange(1, 11) / 10.0
        p25, p50, p75 = acceptance_percentiles(vals)
        assert p50 == pytest.approx(0.55, abs=1e-12)
        assert p25 == pytest.approx(0.325, abs=1e-12)
        assert p75 == pytest.approx(0.775, abs=1e-12)

    def test_monotone(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            vals = rng.random(int(rng.integers(1, 50)))
            p25, p50, p75 = acceptance_percentiles(vals)
            assert p25 <= p50 <= p75

    def test_nan_entries_ignored(self):
        vals = np.array([0.5, math.nan, 0.7])
        assert acceptance_percentiles(vals)[1] == pytest.approx(0.6)

    def test_no_promotions(self):
        with pytest.raises(NoPromotions):
            acceptance_percentiles(np.array([]))
        with pytest.raises(NoPromotions):
            acceptance_percentiles(np.full(5, math.nan))


class TestHistogram:
    def test_single_value(self):
        freq, edges = histogram(np.array([0.5]))
        assert freq.sum() == pytest.approx(1.0)
        assert (freq == 1.0).sum() == 1
        assert edges.shape == (21,)

    def test_uniform_frequencies(self):
        rng = np.random.default_rng(10)
        freq, _ = histogram(rng.random(1_000_000))
        assert np.abs(freq - 0.05).max() <= 0.005

    def test_right_inclusive_last_bin(self):
        freq, _ = histogram(np.ones(100))
        assert freq[-1] == 1.0
        assert freq[:-1].sum() == 0.0

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            histogram(np.array([]))

    def test_bad_range(self):
        with pytest.raises(ValueError):
            histogram(np.array([0.5]), value_range=(1.0, 0.0))


class TestThinning:
    def test_caps_output(self):
        idx = thin_indices(1_000_000, ess=500_000.0)
        assert len(idx) <= 2000

    def test_spacing_tracks_autocorrelation_time(self):
        idx = thin_indices(10_000, ess=100.0)
        assert len(idx) == pytest.approx(100, abs=1)

    def test_short_chain(self):
        assert np.array_equal(thin_indices(5, ess=100.0), np.arange(5))
