"""Exact and surrogate log-densities of the moment-criterion posterior.

The exact kernel at theta is

    omega * [ -1/2 log|W(theta)| - (N/2) mbar(theta)' W(theta)^{-1} mbar(theta) ]
        + log p(theta)

up to an additive constant that cancels in Metropolis ratios. The surrogate
freezes the weighting matrix at the chain's current state, so it skips the
covariance build, factorization and log-determinant: evaluating it costs one
mean-moment computation and one triangular solve. At the anchoring state the
surrogate and the exact density agree by construction (same factor, same
mean moment, same arithmetic).

A risk-only mode (``mode="gibbs"``) exposes the tempered empirical-risk
kernel ``-omega * N * risk(theta) + log p(theta)`` for models that define
``risk``; it has no weighting matrix and its surrogate equals the exact
density.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import (
    DegenerateWeightMatrix,
    NonFiniteInput,
    NotPositiveDefinite,
)
from .linalg import DEFAULT_JITTER_SCALES, CholFactor, cholesky, quad_form
from .models import GaussianPrior, MomentModel, weight_from_contributions

POSTERIOR_MODES = ("gmm", "gibbs")


@dataclass(frozen=True)
class PosteriorConfig:
    """Tempering and estimator switches for the quasi-posterior.

    ``temper_log_det`` controls whether omega also scales the
    log-determinant term (the bracket form) or only the exponential
    quadratic term; the bracket form is the default.
    """

    omega: float = 1.0
    mode: str = "gmm"
    w_estimator: str = "centered"
    temper_log_det: bool = True
    jitter_scales: tuple = DEFAULT_JITTER_SCALES

    def __post_init__(self):
        if self.omega <= 0:
            raise ValueError("omega must be positive")
        if self.mode not in POSTERIOR_MODES:
            raise ValueError(f"mode must be one of {POSTERIOR_MODES}")


@dataclass
class EvalCounters:
    """Work counters: exact evaluations, mean-moment computations, factorizations."""

    n_full_evals: int = 0
    n_mbar_evals: int = 0
    n_cholesky: int = 0


class PosteriorCache(NamedTuple):
    """Everything the chain keeps about its current state.

    ``chol_w`` is the factor of the weighting matrix at ``theta`` and anchors
    the next surrogate; ``log_post_exact`` is the exact log-kernel there.
    Both are None only in risk mode.
    """

    theta: np.ndarray
    mbar: Optional[np.ndarray]
    chol_w: Optional[CholFactor]
    log_post_exact: float


class QuasiPosterior:
    """Evaluator bundle for one (model, prior, config) target."""

    def __init__(self, model: MomentModel, prior: GaussianPrior, config: PosteriorConfig = PosteriorConfig()):
        self.model = model
        self.prior = prior
        self.config = config
        self.counters = EvalCounters()
        self._n = float(model.sample_size)

    # The kernel combination is shared by the exact and surrogate paths so
    # that identical (log_det, quad) inputs give bit-identical outputs.
    def _gmm_log_kernel(self, log_det: float, quad: float, theta: np.ndarray) -> float:
        omega = self.config.omega
        if omega == 1.0:
            bracket = -0.5 * log_det - 0.5 * self._n * quad
        elif self.config.temper_log_det:
            bracket = omega * (-0.5 * log_det - 0.5 * self._n * quad)
        else:
            bracket = -0.5 * log_det + omega * (-0.5 * self._n * quad)
        return bracket + self.prior.log_density(theta)

    def _gibbs_log_kernel(self, theta: np.ndarray) -> float:
        return -self.config.omega * self._n * self.model.risk(theta) + self.prior.log_density(theta)

    def exact_log_posterior(self, theta: np.ndarray, mbar: Optional[np.ndarray] = None) -> PosteriorCache:
        """Exact log-kernel at theta, with the factorization cached for reuse.

        ``mbar`` may carry a precomputed mean moment (from the surrogate
        screen at the same theta) to avoid recomputing it.

        Raises DegenerateWeightMatrix when the weighting matrix cannot be
        factorized even with jitter; the caller decides whether that means
        certain rejection (at a proposal) or a hard error (at the start).
        """
        self.counters.n_full_evals += 1
        if self.config.mode == "gibbs":
            return PosteriorCache(theta, None, None, self._gibbs_log_kernel(theta))
        if mbar is None:
            mbar = self.model.mbar(theta)
            self.counters.n_mbar_evals += 1
        w = self.model.weight_matrix(theta, self.config.w_estimator)
        self.counters.n_cholesky += 1
        try:
            factor = cholesky(w, self.config.jitter_scales)
        except (NotPositiveDefinite, NonFiniteInput) as exc:
            raise DegenerateWeightMatrix(str(exc)) from exc
        quad = quad_form(factor, mbar)
        value = self._gmm_log_kernel(factor.log_det, quad, theta)
        return PosteriorCache(theta, mbar, factor, value)

    def surrogate_with_mbar(self, cache: PosteriorCache, theta: np.ndarray) -> tuple[float, Optional[np.ndarray]]:
        """Surrogate log-density plus the mean moment it computed.

        Never factorizes and never forms the weighting matrix; the returned
        mean moment can be fed back into ``exact_log_posterior``.
        """
        if self.config.mode == "gibbs":
            return self._gibbs_log_kernel(theta), None
        mbar = self.model.mbar(theta)
        self.counters.n_mbar_evals += 1
        quad = quad_form(cache.chol_w, mbar)
        return self._gmm_log_kernel(cache.chol_w.log_det, quad, theta), mbar

    def surrogate_log_posterior(self, cache: PosteriorCache, theta: np.ndarray) -> float:
        """Surrogate log-density with the weighting matrix frozen at the cache state."""
        return self.surrogate_with_mbar(cache, theta)[0]
