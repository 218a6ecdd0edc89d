"""The oracle suite itself: sensitivity and stability."""

import numpy as np
import pytest

from damcmc.validation import (
    check_constant_w_alpha2,
    check_discrete_detailed_balance,
    check_finite_difference_moments,
    check_gaussian_target_moments,
    discrete_transition_matrix,
    run_all_checks,
)


class TestDiscreteOracle:
    def test_transition_matrix_rows_sum_to_one(self):
        rng = np.random.default_rng(0)
        target = rng.random(5) + 0.1
        surrogate = rng.random(5) + 0.1
        p = discrete_transition_matrix(np.log(target), np.log(surrogate))
        assert np.allclose(p.sum(axis=1), 1.0, atol=1e-15)
        assert (p >= 0).all()

    def test_detailed_balance_passes(self):
        res = check_discrete_detailed_balance(seed=0)
        assert res.passed
        assert res.discrepancy <= 1e-12

    def test_injected_sign_bug_detected(self):
        res = check_discrete_detailed_balance(seed=0, inject_alpha2_bug=True)
        assert not res.passed
        assert res.discrepancy > 1e-6

    def test_stable_across_seeds(self):
        for seed in range(10):
            assert check_discrete_detailed_balance(seed=seed).passed
            assert not check_discrete_detailed_balance(seed=seed, inject_alpha2_bug=True).passed


class TestSamplerChecks:
    def test_constant_w_exactness(self):
        res = check_constant_w_alpha2(seed=1, n_steps=5000)
        assert res.passed
        assert res.discrepancy == 0.0

    def test_constant_w_stable_across_seeds(self):
        for seed in range(10):
            assert check_constant_w_alpha2(seed=seed, n_steps=2000).passed

    def test_gaussian_moments(self):
        res = check_gaussian_target_moments(seed=2, n_steps=40_000)
        assert res.passed

    def test_finite_differences(self):
        res = check_finite_difference_moments(seed=3)
        assert res.passed
        assert res.discrepancy <= 1e-5


def test_run_all_checks_reports_failures_without_raising():
    results = run_all_checks(
        seed=4, inject_alpha2_bug=True, constant_w_steps=2000, gaussian_steps=10_000
    )
    by_name = {r.name: r for r in results}
    assert not by_name["discrete_detailed_balance"].passed
    assert by_name["finite_difference_moments"].passed
