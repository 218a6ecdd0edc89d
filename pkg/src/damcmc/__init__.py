"""Posterior sampling for moment-criterion (quasi-Bayesian) targets.

Core pieces: moment models over datasets, an exact/surrogate posterior
evaluator with factorization caching, adaptive random-walk Metropolis in
standard and delayed-acceptance flavors, multivariate-ESS diagnostics, and
an experiment service with a CLI front end.
"""

__version__ = "0.1.0"

from .diagnostics import EssReport, acceptance_percentiles, histogram, mcse, multi_ess
from .linalg import CholFactor, cholesky, empirical_cov, quad_form
from .models import (
    ConstantMomentModel,
    GaussianPrior,
    IvDataset,
    IvMomentModel,
    LinearRegressionMomentModel,
    MomentModel,
    SyntheticDataset,
    default_prior,
    generate_synthetic,
)
from .posterior import EvalCounters, PosteriorCache, PosteriorConfig, QuasiPosterior
from .sampler import (
    AdaptiveProposal,
    ChainTrace,
    SamplerConfig,
    da_step,
    mh_step,
    run_chain,
)

__all__ = [
    "__version__",
    "AdaptiveProposal",
    "ChainTrace",
    "CholFactor",
    "ConstantMomentModel",
    "EssReport",
    "EvalCounters",
    "GaussianPrior",
    "IvDataset",
    "IvMomentModel",
    "LinearRegressionMomentModel",
    "MomentModel",
    "PosteriorCache",
    "PosteriorConfig",
    "QuasiPosterior",
    "SamplerConfig",
    "SyntheticDataset",
    "acceptance_percentiles",
    "cholesky",
    "da_step",
    "default_prior",
    "empirical_cov",
    "generate_synthetic",
    "histogram",
    "mcse",
    "mh_step",
    "multi_ess",
    "quad_form",
    "run_chain",
]
