"""Adaptive random-walk Metropolis-Hastings, single-stage and delayed-acceptance.

Both kernels share one Gaussian proposal ``theta + sqrt(eps) L_Sigma z`` whose
step size and shape adapt during warmup: the log step size follows
``log eps += t^{-varsigma} (abar_t - target)`` with ``abar_t`` the running
mean of per-iteration acceptance probabilities, and Sigma tracks the online
(Welford) covariance of the visited states once enough history exists.

The delayed-acceptance kernel screens each proposal with the surrogate
posterior first; only survivors pay for the exact evaluation. Because the
surrogate is exact at the current state, the second-stage probability
reduces to exact-over-surrogate at the proposal, and a rejection at stage
one costs no covariance build and no factorization.
"""

import math
import time
from dataclasses import dataclass
from typing import NamedTuple, Optional, Union

import numpy as np

from .errors import (
    DegenerateWeightMatrix,
    InitializationDegenerate,
    NotPositiveDefinite,
)
from .linalg import cholesky
from .models import GaussianPrior, MomentModel
from .posterior import EvalCounters, PosteriorCache, PosteriorConfig, QuasiPosterior

KERNELS = ("standard", "delayed")

SeedLike = Union[int, np.random.SeedSequence]


@dataclass
class SamplerConfig:
    """Chain length, adaptation targets and RNG discipline for one chain.

    ``lockstep_rng`` draws the stage-two uniforms from a separate substream
    so that a delayed chain and a standard chain with the same seed consume
    identical proposal randomness (used by equivalence tests).
    ``adapt_on_realized`` switches the adaptation statistic from the
    per-iteration acceptance probability to the realized accept indicator.
    ``adapt_statistic`` feeds the step-size update either the current
    iteration's statistic ("instant", the standard stochastic-approximation
    form whose fixed point is a realized acceptance rate at the target) or
    the running mean of all statistics so far ("running-mean"; with a cold
    step-size start the early transient biases the mean and the realized
    rate can settle far from the target).
    """

    n_warmup: int
    n_draws: int
    seed: SeedLike = 0
    target_accept: float = 0.25
    varsigma: float = 0.51
    eps_init: Optional[float] = None
    sigma_init: Optional[np.ndarray] = None
    initial_theta: Optional[np.ndarray] = None
    adapt_statistic: str = "instant"
    adapt_on_realized: bool = False
    lockstep_rng: bool = False
    debug_check_surrogate: bool = False

    def __post_init__(self):
        if not 0.0 < self.target_accept < 1.0:
            raise ValueError("target_accept must lie in (0, 1)")
        if not 0.5 < self.varsigma < 1.0:
            raise ValueError("varsigma must lie in (0.5, 1)")
        if self.n_warmup < 0 or self.n_draws < 0:
            raise ValueError("chain lengths must be nonnegative")
        if self.adapt_statistic not in ("instant", "running-mean"):
            raise ValueError("adapt_statistic must be 'instant' or 'running-mean'")


def _accept_prob(log_ratio: float) -> float:
    """min(1, exp(log_ratio)) with NaN mapped to certain rejection."""
    if log_ratio >= 0.0:
        return 1.0
    p = math.exp(log_ratio)
    return p if p == p else 0.0


def stage1_accept_prob(log_surr_cur: float, log_surr_prop: float) -> float:
    """Screening probability of the two-stage kernel (symmetric proposal)."""
    return _accept_prob(log_surr_prop - log_surr_cur)


def stage2_accept_prob(
    log_surr_cur: float, log_exact_cur: float, log_surr_prop: float, log_exact_prop: float
) -> float:
    """Confirmation probability of the two-stage kernel.

    General form for a fixed surrogate; in the chain the current surrogate
    and exact values are the same cached number, so the current-state term
    is exactly zero and this reduces to exact-over-surrogate at the proposal.
    """
    log_ratio = (log_exact_prop - log_surr_prop) - (log_exact_cur - log_surr_cur)
    return _accept_prob(log_ratio)


def two_stage_accept_probs(
    log_surr_cur: float, log_exact_cur: float, log_surr_prop: float, log_exact_prop: float
) -> tuple[float, float]:
    """Both stage probabilities; the move probability is their product."""
    return (
        stage1_accept_prob(log_surr_cur, log_surr_prop),
        stage2_accept_prob(log_surr_cur, log_exact_cur, log_surr_prop, log_exact_prop),
    )


class StepRecord(NamedTuple):
    """Outcome of one chain iteration."""

    alpha1: float
    alpha2: float  # NaN when the proposal was not promoted
    promoted: bool
    accepted: bool
    degenerate: bool
    overall_prob: float  # alpha1 * alpha2 when promoted, else alpha1


class AdaptiveProposal:
    """Random-walk proposal state: step size, shape, and adaptation history."""

    # Relative ridge added to the adapted covariance before factorization.
    SIGMA_RIDGE = 1e-10

    def __init__(
        self,
        k: int,
        eps_init: Optional[float] = None,
        sigma_init: Optional[np.ndarray] = None,
        target_accept: float = 0.25,
        varsigma: float = 0.51,
        statistic: str = "instant",
    ):
        self.k = k
        self.target_accept = target_accept
        self.varsigma = varsigma
        self.statistic = statistic
        self.log_eps = math.log(eps_init if eps_init is not None else 2.38**2 / k)
        self._sqrt_eps = math.exp(0.5 * self.log_eps)
        self.sigma = np.eye(k) if sigma_init is None else np.asarray(sigma_init, dtype=float)
        self._lower = cholesky(self.sigma).lower
        self.running_mean = np.zeros(k)
        self._m2 = np.zeros((k, k))
        self.iter = 0
        self.accept_prob_sum = 0.0

    @property
    def eps(self) -> float:
        return math.exp(self.log_eps)

    @property
    def chol_sigma(self) -> np.ndarray:
        return self._lower

    @property
    def running_cov(self) -> np.ndarray:
        if self.iter < 2:
            return np.zeros((self.k, self.k))
        return self._m2 / (self.iter - 1)

    def propose(self, rng: np.random.Generator, theta: np.ndarray) -> np.ndarray:
        """One symmetric Gaussian step from theta."""
        z = rng.standard_normal(self.k)
        return theta + self._sqrt_eps * (self._lower @ z)

    def adapt(self, overall_accept_prob: float, theta_new: np.ndarray, t: int) -> None:
        """Warmup-only update of step size, running moments and shape."""
        self.accept_prob_sum += overall_accept_prob
        if self.statistic == "running-mean":
            feedback = self.accept_prob_sum / t
        else:
            feedback = overall_accept_prob
        self.log_eps += t ** (-self.varsigma) * (feedback - self.target_accept)
        self._sqrt_eps = math.exp(0.5 * self.log_eps)

        self.iter += 1
        delta = theta_new - self.running_mean
        self.running_mean += delta / self.iter
        self._m2 += np.outer(delta, theta_new - self.running_mean)

        if self.iter >= 2 * self.k and self.iter >= 2:
            cov = self._m2 / (self.iter - 1)
            ridge = self.SIGMA_RIDGE * float(np.trace(cov)) / self.k
            candidate = cov + ridge * np.eye(self.k)
            try:
                lower = cholesky(candidate).lower
            except NotPositiveDefinite:
                return  # keep previous shape; early covariance can be singular
            self.sigma = candidate
            self._lower = lower


def da_step(
    rng: np.random.Generator,
    posterior: QuasiPosterior,
    cache: PosteriorCache,
    proposal: AdaptiveProposal,
    stage2_rng: Optional[np.random.Generator] = None,
) -> tuple[PosteriorCache, StepRecord]:
    """One delayed-acceptance cycle; returns the (possibly unchanged) cache."""
    theta_prop = proposal.propose(rng, cache.theta)
    log_surr_prop, mbar_prop = posterior.surrogate_with_mbar(cache, theta_prop)
    alpha1 = stage1_accept_prob(cache.log_post_exact, log_surr_prop)
    if rng.random() > alpha1:
        return cache, StepRecord(alpha1, math.nan, False, False, False, alpha1)
    try:
        new_cache = posterior.exact_log_posterior(theta_prop, mbar=mbar_prop)
    except DegenerateWeightMatrix:
        return cache, StepRecord(alpha1, 0.0, True, False, True, 0.0)
    alpha2 = stage2_accept_prob(
        cache.log_post_exact, cache.log_post_exact, log_surr_prop, new_cache.log_post_exact
    )
    u2 = (stage2_rng or rng).random()
    if u2 <= alpha2:
        return new_cache, StepRecord(alpha1, alpha2, True, True, False, alpha1 * alpha2)
    return cache, StepRecord(alpha1, alpha2, True, False, False, alpha1 * alpha2)


def mh_step(
    rng: np.random.Generator,
    posterior: QuasiPosterior,
    cache: PosteriorCache,
    proposal: AdaptiveProposal,
) -> tuple[PosteriorCache, StepRecord]:
    """One standard Metropolis-Hastings cycle with a full exact evaluation."""
    theta_prop = proposal.propose(rng, cache.theta)
    try:
        new_cache = posterior.exact_log_posterior(theta_prop)
    except DegenerateWeightMatrix:
        return cache, StepRecord(0.0, 0.0, True, False, True, 0.0)
    alpha = _accept_prob(new_cache.log_post_exact - cache.log_post_exact)
    if rng.random() <= alpha:
        return new_cache, StepRecord(alpha, alpha, True, True, False, alpha)
    return cache, StepRecord(alpha, alpha, True, False, False, alpha)


@dataclass
class ChainTrace:
    """Post-warmup draws plus the full per-iteration acceptance history."""

    kernel: str
    draws: np.ndarray  # (n_draws, k)
    alpha1: np.ndarray  # (n_warmup + n_draws,)
    alpha2: np.ndarray  # NaN where not promoted
    promoted: np.ndarray
    accepted: np.ndarray
    degenerate: np.ndarray
    n_warmup: int
    wall_clock_seconds: float
    counters: EvalCounters
    final_eps: float

    @property
    def n_iterations(self) -> int:
        return self.accepted.shape[0]

    @property
    def accept_rate(self) -> float:
        """Realized post-warmup acceptance rate."""
        post = self.accepted[self.n_warmup:]
        return float(post.mean()) if post.size else math.nan

    def stage2_probs(self, post_warmup_only: bool = True) -> np.ndarray:
        """Second-stage probabilities of promoted proposals."""
        start = self.n_warmup if post_warmup_only else 0
        mask = self.promoted[start:]
        return self.alpha2[start:][mask]


def run_chain(
    kernel: str,
    model: MomentModel,
    prior: GaussianPrior,
    config: SamplerConfig,
    posterior_config: Optional[PosteriorConfig] = None,
) -> ChainTrace:
    """Run one chain of ``n_warmup + n_draws`` iterations, adapting during warmup.

    The wall clock covers the iteration loop only (initialization and data
    handling excluded). Raises InitializationDegenerate when the weighting
    matrix at the initial state cannot be factorized.
    """
    if kernel not in KERNELS:
        raise ValueError(f"kernel must be one of {KERNELS}")
    posterior = QuasiPosterior(model, prior, posterior_config or PosteriorConfig())
    k = model.param_dim

    seed = config.seed
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    if config.lockstep_rng:
        main_seq, stage2_seq = seq.spawn(2)
        rng = np.random.default_rng(main_seq)
        stage2_rng = np.random.default_rng(stage2_seq)
    else:
        rng = np.random.default_rng(seq)
        stage2_rng = None

    if config.initial_theta is not None:
        theta0 = np.asarray(config.initial_theta, dtype=float)
    else:
        # Start at the criterion point estimate when the model provides one;
        # the prior mean can sit dozens of posterior standard deviations from
        # the mass and burn the warmup budget on the approach.
        start = model.initial_point()
        theta0 = prior.mean.copy() if start is None else np.asarray(start, dtype=float)
    try:
        cache = posterior.exact_log_posterior(theta0)
    except DegenerateWeightMatrix as exc:
        raise InitializationDegenerate(
            "weighting matrix is degenerate at the initial state; "
            "start the chain elsewhere (e.g. near a rough estimate)"
        ) from exc

    proposal = AdaptiveProposal(
        k,
        eps_init=config.eps_init,
        sigma_init=config.sigma_init,
        target_accept=config.target_accept,
        varsigma=config.varsigma,
        statistic=config.adapt_statistic,
    )

    n_warmup, n_draws = config.n_warmup, config.n_draws
    total = n_warmup + n_draws
    draws = np.empty((n_draws, k))
    alpha1 = np.empty(total)
    alpha2 = np.full(total, math.nan)
    promoted = np.zeros(total, dtype=bool)
    accepted = np.zeros(total, dtype=bool)
    degenerate = np.zeros(total, dtype=bool)

    delayed = kernel == "delayed"
    debug = config.debug_check_surrogate

    t_start = time.perf_counter()
    for t in range(1, total + 1):
        if delayed:
            cache, rec = da_step(rng, posterior, cache, proposal, stage2_rng)
        else:
            cache, rec = mh_step(rng, posterior, cache, proposal)
        i = t - 1
        alpha1[i] = rec.alpha1
        alpha2[i] = rec.alpha2
        promoted[i] = rec.promoted
        accepted[i] = rec.accepted
        degenerate[i] = rec.degenerate
        if t <= n_warmup:
            stat = float(rec.accepted) if config.adapt_on_realized else rec.overall_prob
            proposal.adapt(stat, cache.theta, t)
        else:
            draws[i - n_warmup] = cache.theta
        if debug:
            assert posterior.surrogate_log_posterior(cache, cache.theta) == cache.log_post_exact
    wall = time.perf_counter() - t_start

    return ChainTrace(
        kernel=kernel,
        draws=draws,
        alpha1=alpha1,
        alpha2=alpha2,
        promoted=promoted,
        accepted=accepted,
        degenerate=degenerate,
        n_warmup=n_warmup,
        wall_clock_seconds=wall,
        counters=posterior.counters,
        final_eps=proposal.eps,
    )
