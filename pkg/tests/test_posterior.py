"""Exact and surrogate evaluators against hand values and a dense-inverse oracle."""

import numpy as np
import pytest

from damcmc.errors import DegenerateWeightMatrix, InitializationDegenerate
from damcmc.models import (
    ConstantMomentModel,
    LinearRegressionMomentModel,
    MomentModel,
    default_prior,
    generate_synthetic,
)
from damcmc.posterior import PosteriorConfig, QuasiPosterior
from damcmc.sampler import SamplerConfig, run_chain


class FlatPrior:
    mean = None

    def log_density(self, theta):
        return 0.0


class StubModel(MomentModel):
    """Fixed moment rows shifted by theta; covers scalar hand examples."""

    def __init__(self, base_rows, n=None):
        base = np.atleast_2d(np.asarray(base_rows, dtype=float))
        self.rows = base
        self.sample_size = n if n is not None else base.shape[0]
        self.param_dim = self.moment_dim = base.shape[1]

    def moment_contributions(self, theta):
        return self.rows + (theta - 0.0)


def dense_log_kernel(model, prior, theta, n=None, estimator="centered", omega=1.0):
    """Independent route: explicit inverse and determinant, no factorization."""
    n = n if n is not None else model.sample_size
    contribs = model.moment_contributions(theta)
    mbar = contribs.mean(axis=0)
    if estimator == "centered":
        dev = contribs - mbar
        w = dev.T @ dev / contribs.shape[0]
    else:
        w = contribs.T @ contribs / contribs.shape[0]
    sign, logdet = np.linalg.slogdet(w)
    assert sign > 0
    quad = float(mbar @ np.linalg.inv(w) @ mbar)
    return omega * (-0.5 * logdet - 0.5 * n * quad) + prior.log_density(theta)


class TestExactLogPosterior:
    def test_scalar_hand_value(self):
        # one-dimensional target: mbar = 0.5, W = 2, N = 4, flat prior
        rows = 0.5 + np.array([[np.sqrt(2)], [-np.sqrt(2)], [np.sqrt(2)], [-np.sqrt(2)]])
        post = QuasiPosterior(StubModel(rows), FlatPrior())
        cache = post.exact_log_posterior(np.array([0.0]))
        # -1/2 log 2 - (4/2) * (0.25 / 2) = -0.5966 to 4 d.p.
        assert cache.log_post_exact == pytest.approx(-0.5966, abs=5e-5)

    def test_zero_moment_unit_weight(self):
        # mbar(theta0) = 0 with W = I: log-density reduces to the prior.
        rows = np.sqrt(2.0) * np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
        model = ConstantMomentModel(np.zeros(2), rows)
        assert np.allclose(model.weight_matrix(np.zeros(2)), np.eye(2), atol=1e-12)
        prior = default_prior(2)
        post = QuasiPosterior(model, prior)
        cache = post.exact_log_posterior(np.zeros(2))
        assert cache.log_post_exact == pytest.approx(prior.log_density(np.zeros(2)), abs=1e-12)

    @pytest.mark.parametrize("estimator", ["centered", "uncentered"])
    def test_dense_inverse_oracle(self, estimator):
        data = generate_synthetic(200, 5, seed=21)
        model = LinearRegressionMomentModel.from_dataset(data)
        prior = default_prior(5)
        post = QuasiPosterior(model, prior, PosteriorConfig(w_estimator=estimator))
        rng = np.random.default_rng(1)
        base = model.initial_point()
        for _ in range(20):
            theta = base + 0.3 * rng.standard_normal(5)
            got = post.exact_log_posterior(theta).log_post_exact
            want = dense_log_kernel(model, prior, theta, estimator=estimator)
            assert got == pytest.approx(want, rel=1e-8, abs=1e-8)

    def test_additive_constant_convention(self):
        # Differences of the log-kernel match the fully dense evaluation.
        data = generate_synthetic(150, 4, seed=22)
        model = LinearRegressionMomentModel.from_dataset(data)
        prior = default_prior(4)
        post = QuasiPosterior(model, prior)
        base = model.initial_point()
        rng = np.random.default_rng(2)
        t1 = base + 0.2 * rng.standard_normal(4)
        t2 = base + 0.2 * rng.standard_normal(4)
        got = post.exact_log_posterior(t1).log_post_exact - post.exact_log_posterior(t2).log_post_exact
        want = dense_log_kernel(model, prior, t1) - dense_log_kernel(model, prior, t2)
        assert got == pytest.approx(want, abs=1e-8)

    def test_omega_scales_bracket(self):
        data = generate_synthetic(100, 4, seed=23)
        model = LinearRegressionMomentModel.from_dataset(data)
        prior = default_prior(4)
        theta = model.initial_point() + 0.1
        lp = prior.log_density(theta)
        v1 = QuasiPosterior(model, prior, PosteriorConfig(omega=1.0)).exact_log_posterior(theta)
        v2 = QuasiPosterior(model, prior, PosteriorConfig(omega=2.0)).exact_log_posterior(theta)
        assert v2.log_post_exact - lp == pytest.approx(2.0 * (v1.log_post_exact - lp), rel=1e-12)

    def test_omega_exponential_only_mode(self):
        data = generate_synthetic(100, 4, seed=24)
        model = LinearRegressionMomentModel.from_dataset(data)
        prior = default_prior(4)
        theta = model.initial_point() + 0.1
        cfg = PosteriorConfig(omega=2.0, temper_log_det=False)
        got = QuasiPosterior(model, prior, cfg).exact_log_posterior(theta).log_post_exact
        contribs = model.moment_contributions(theta)
        dev = contribs - contribs.mean(axis=0)
        w = dev.T @ dev / contribs.shape[0]
        _, logdet = np.linalg.slogdet(w)
        quad = float(model.mbar(theta) @ np.linalg.inv(w) @ model.mbar(theta))
        want = -0.5 * logdet + 2.0 * (-0.5 * model.sample_size * quad) + prior.log_density(theta)
        assert got == pytest.approx(want, rel=1e-10)

    def test_degenerate_weight_matrix(self):
        model = LinearRegressionMomentModel(np.ones((4, 2)), np.full(4, 2.0))
        post = QuasiPosterior(model, default_prior(2))
        with pytest.raises(DegenerateWeightMatrix):
            post.exact_log_posterior(np.zeros(2))

    def test_degenerate_initial_state_aborts_chain(self):
        model = LinearRegressionMomentModel(np.ones((4, 2)), np.full(4, 2.0))
        model.initial_point = lambda: np.zeros(2)
        cfg = SamplerConfig(n_warmup=5, n_draws=5, seed=0)
        with pytest.raises(InitializationDegenerate):
            run_chain("standard", model, default_prior(2), cfg)


class TestSurrogate:
    def test_self_consistency_at_cache_state(self):
        data = generate_synthetic(200, 5, seed=25)
        model = LinearRegressionMomentModel.from_dataset(data)
        post = QuasiPosterior(model, default_prior(5))
        theta = model.initial_point()
        cache = post.exact_log_posterior(theta)
        assert post.surrogate_log_posterior(cache, theta) == cache.log_post_exact

    def test_exact_when_weight_constant(self):
        model = ConstantMomentModel.gaussian_target(np.zeros(2), np.eye(2), seed=3)
        post = QuasiPosterior(model, default_prior(2))
        cache = post.exact_log_posterior(np.array([0.3, -0.2]))
        rng = np.random.default_rng(4)
        for _ in range(10):
            theta = rng.standard_normal(2)
            surr = post.surrogate_log_posterior(cache, theta)
            exact = post.exact_log_posterior(theta).log_post_exact
            assert surr == pytest.approx(exact, abs=1e-12)

    def test_matches_dense_evaluation_with_frozen_matrix(self):
        data = generate_synthetic(200, 5, seed=26)
        model = LinearRegressionMomentModel.from_dataset(data)
        prior = default_prior(5)
        post = QuasiPosterior(model, prior)
        anchor = model.initial_point()
        cache = post.exact_log_posterior(anchor)
        contribs = model.moment_contributions(anchor)
        dev = contribs - contribs.mean(axis=0)
        w_frozen = dev.T @ dev / contribs.shape[0]
        w_inv = np.linalg.inv(w_frozen)
        _, logdet = np.linalg.slogdet(w_frozen)
        rng = np.random.default_rng(5)
        for _ in range(10):
            theta = anchor + 0.3 * rng.standard_normal(5)
            mbar = model.mbar(theta)
            want = -0.5 * logdet - 0.5 * 200 * float(mbar @ w_inv @ mbar) + prior.log_density(theta)
            assert post.surrogate_log_posterior(cache, theta) == pytest.approx(want, rel=1e-10)

    def test_surrogate_counts_no_factorization(self):
        data = generate_synthetic(100, 4, seed=27)
        model = LinearRegressionMomentModel.from_dataset(data)
        post = QuasiPosterior(model, default_prior(4))
        cache = post.exact_log_posterior(model.initial_point())
        assert post.counters.n_full_evals == 1
        assert post.counters.n_cholesky == 1
        assert post.counters.n_mbar_evals == 1
        post.surrogate_log_posterior(cache, model.initial_point() + 0.1)
        assert post.counters.n_cholesky == 1  # unchanged
        assert post.counters.n_full_evals == 1
        assert post.counters.n_mbar_evals == 2

    def test_exact_reuses_precomputed_mbar(self):
        data = generate_synthetic(100, 4, seed=28)
        model = LinearRegressionMomentModel.from_dataset(data)
        post = QuasiPosterior(model, default_prior(4))
        theta = model.initial_point() + 0.05
        mbar = model.mbar(theta)
        before = post.counters.n_mbar_evals
        post.exact_log_posterior(theta, mbar=mbar)
        assert post.counters.n_mbar_evals == before


class TestGibbsMode:
    def test_risk_kernel_value(self):
        data = generate_synthetic(80, 4, seed=29)
        model = LinearRegressionMomentModel.from_dataset(data)
        prior = default_prior(4)
        cfg = PosteriorConfig(omega=0.7, mode="gibbs")
        post = QuasiPosterior(model, prior, cfg)
        theta = np.array([0.5, 1.0, 0.8, -0.2])
        cache = post.exact_log_posterior(theta)
        want = -0.7 * 80 * model.risk(theta) + prior.log_density(theta)
        assert cache.log_post_exact == pytest.approx(want, rel=1e-12)
        assert cache.chol_w is None

    def test_surrogate_equals_exact(self):
        data = generate_synthetic(80, 4, seed=30)
        model = LinearRegressionMomentModel.from_dataset(data)
        post = QuasiPosterior(model, default_prior(4), PosteriorConfig(mode="gibbs"))
        cache = post.exact_log_posterior(np.zeros(4))
        theta = np.array([1.0, 0.5, -0.5, 0.1])
        assert post.surrogate_log_posterior(cache, theta) == post.exact_log_posterior(theta).log_post_exact


def test_posterior_config_validation():
    with pytest.raises(ValueError):
        PosteriorConfig(omega=0.0)
    with pytest.raises(ValueError):
        PosteriorConfig(mode="other")
