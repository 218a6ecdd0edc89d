"""Correctness harness for the samplers.

Each check pins its own independent oracle:

* an exhaustively enumerated discrete target whose two-stage transition
  matrix must satisfy detailed balance and stationarity,
* a constant-weighting-matrix model on which the surrogate is exact, so
  every promoted proposal must clear the second stage with probability 1,
* a correlated Gaussian target with known mean and covariance,
* finite differences of the empirical risk against the analytic mean moment.

The harness can inject a sign bug into the second-stage probability of the
discrete check to demonstrate that the detailed-balance oracle actually has
teeth.
"""

import math
from dataclasses import dataclass

import numpy as np

from .diagnostics import mcse, multi_ess
from .models import (
    ConstantMomentModel,
    GaussianPrior,
    LinearRegressionMomentModel,
    generate_synthetic,
)
from .sampler import SamplerConfig, run_chain, stage1_accept_prob, stage2_accept_prob


@dataclass(frozen=True)
class CheckResult:
    """One oracle check: measured discrepancy against its tolerance."""

    name: str
    passed: bool
    discrepancy: float
    tolerance: float
    detail: str = ""


def discrete_transition_matrix(
    log_target: np.ndarray, log_surrogate: np.ndarray, inject_alpha2_bug: bool = False
) -> np.ndarray:
    """Two-stage transition matrix on a finite state space.

    The proposal is uniform over the other states (symmetric). Off-diagonal
    mass is proposal x alpha1 x alpha2 using the sampler's stage-probability
    functions with a fixed surrogate; the diagonal absorbs all rejections.
    The bug flag evaluates the second stage with current and proposed states
    swapped, flipping the sign of its log ratio.
    """
    s = log_target.shape[0]
    q = 1.0 / (s - 1)
    p = np.zeros((s, s))
    for i in range(s):
        for j in range(s):
            if i == j:
                continue
            a1 = stage1_accept_prob(log_surrogate[i], log_surrogate[j])
            if inject_alpha2_bug:
                a2 = stage2_accept_prob(
                    log_surrogate[j], log_target[j], log_surrogate[i], log_target[i]
                )
            else:
                a2 = stage2_accept_prob(
                    log_surrogate[i], log_target[i], log_surrogate[j], log_target[j]
                )
            p[i, j] = q * a1 * a2
        p[i, i] = 1.0 - p[i].sum()
    return p


def check_discrete_detailed_balance(
    seed: int = 0, n_states: int = 5, tolerance: float = 1e-12, inject_alpha2_bug: bool = False
) -> CheckResult:
    """Detailed balance and stationarity of the enumerated two-stage kernel."""
    rng = np.random.default_rng(seed)
    target = rng.random(n_states) + 0.1
    target /= target.sum()
    # A surrogate that disagrees with the target but not absurdly so.
    surrogate = target * (0.5 + rng.random(n_states))
    surrogate /= surrogate.sum()

    p = discrete_transition_matrix(np.log(target), np.log(surrogate), inject_alpha2_bug)

    flow = target[:, None] * p
    db_violation = float(np.abs(flow - flow.T).max())
    stat_violation = float(np.abs(target @ p - target).max())
    disc = max(db_violation, stat_violation)
    return CheckResult(
        name="discrete_detailed_balance",
        passed=disc <= tolerance,
        discrepancy=disc,
        tolerance=tolerance,
        detail=f"{n_states} states, db={db_violation:.3e}, stationarity={stat_violation:.3e}",
    )


def _gaussian_target_chain(seed: int, n_warmup: int, n_draws: int):
    mu0 = np.array([0.6, -0.4])
    cov0 = np.array([[1.0, 0.6], [0.6, 1.2]])
    model = ConstantMomentModel.gaussian_target(mu0, cov0, n_obs=16, seed=7)
    prior = GaussianPrior(np.zeros(2), 1e4)
    config = SamplerConfig(n_warmup=n_warmup, n_draws=n_draws, seed=seed)
    trace = run_chain("delayed", model, prior, config)
    return mu0, cov0, trace


def check_constant_w_alpha2(seed: int = 0, n_steps: int = 100_000) -> CheckResult:
    """On a constant-W model every promoted proposal must have alpha2 == 1."""
    _, _, trace = _gaussian_target_chain(seed, n_warmup=n_steps // 2, n_draws=n_steps - n_steps // 2)
    probs = trace.stage2_probs(post_warmup_only=False)
    if probs.size == 0:
        return CheckResult("constant_w_alpha2", False, math.inf, 0.0, "no promotions")
    disc = float(np.abs(probs - 1.0).max())
    return CheckResult(
        name="constant_w_alpha2",
        passed=disc == 0.0,
        discrepancy=disc,
        tolerance=0.0,
        detail=f"{probs.size} promotions over {n_steps} steps",
    )


def check_gaussian_target_moments(seed: int = 0, n_steps: int = 200_000) -> CheckResult:
    """Known-target oracle: recover the mean within 3 MCSE, covariance within 10%."""
    n_warmup = max(2000, n_steps // 10)
    mu0, cov0, trace = _gaussian_target_chain(seed, n_warmup=n_warmup, n_draws=n_steps - n_warmup)
    draws = trace.draws
    ess = multi_ess(draws)
    err = mcse(draws, ess.multi_ess)
    mean_z = np.abs(draws.mean(axis=0) - mu0) / err
    cov_hat = np.cov(draws, rowvar=False)
    scale = np.sqrt(np.outer(np.diag(cov0), np.diag(cov0)))
    cov_rel = float((np.abs(cov_hat - cov0) / scale).max())
    disc = max(float(mean_z.max()) / 3.0, cov_rel / 0.10)
    return CheckResult(
        name="gaussian_target_moments",
        passed=bool(mean_z.max() < 3.0 and cov_rel < 0.10),
        discrepancy=disc,
        tolerance=1.0,
        detail=(
            f"max |mean error|/MCSE = {float(mean_z.max()):.2f} (<3), "
            f"max rel cov error = {cov_rel:.3f} (<0.10), multiESS = {ess.multi_ess:.0f}"
        ),
    )


def check_finite_difference_moments(
    seed: int = 0, n_points: int = 10, step: float = 1e-5, tolerance: float = 1e-5
) -> CheckResult:
    """Central finite differences of the risk must match the mean moment."""
    data = generate_synthetic(200, 5, seed=seed)
    model = LinearRegressionMomentModel.from_dataset(data)
    rng = np.random.default_rng(seed + 1)
    worst = 0.0
    for _ in range(n_points):
        theta = rng.standard_normal(model.param_dim)
        grad_fd = np.empty(model.param_dim)
        for j in range(model.param_dim):
            up = theta.copy()
            dn = theta.copy()
            up[j] += step
            dn[j] -= step
            grad_fd[j] = (model.risk(up) - model.risk(dn)) / (2.0 * step)
        mref = model.mbar(theta)
        rel = float(np.linalg.norm(grad_fd - mref) / np.linalg.norm(mref))
        worst = max(worst, rel)
    return CheckResult(
        name="finite_difference_moments",
        passed=worst <= tolerance,
        discrepancy=worst,
        tolerance=tolerance,
        detail=f"worst relative error over {n_points} random points",
    )


def run_all_checks(
    seed: int = 0,
    inject_alpha2_bug: bool = False,
    constant_w_steps: int = 100_000,
    gaussian_steps: int = 200_000,
) -> list[CheckResult]:
    """Run the full oracle suite; failures are results, not exceptions."""
    return [
        check_discrete_detailed_balance(seed=seed, inject_alpha2_bug=inject_alpha2_bug),
        check_constant_w_alpha2(seed=seed, n_steps=constant_w_steps),
        check_gaussian_target_moments(seed=seed, n_steps=gaussian_steps),
        check_finite_difference_moments(seed=seed),
    ]
