"""Chain diagnostics: multivariate effective sample size, acceptance summaries,
and histogram reductions for report tables and figures.

The multivariate ESS follows the determinant form

    multiESS = n * ( |Lambda| / |Sigma_bm| )^{1/p}

with Lambda the sample covariance of the draws and Sigma_bm the multivariate
batch-means estimate of the asymptotic covariance: nonoverlapping batches of
size floor(sqrt(n)), covariance of the batch means scaled by the batch size.
Trailing draws that do not fill a batch are discarded.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import EmptyInput, NoPromotions


@dataclass(frozen=True)
class EssReport:
    """Multivariate ESS with the quantities needed to interpret it."""

    multi_ess: float
    ess_per_iter: float
    ess_per_second: float
    n: int
    p: int
    batch_size: int
    n_batches: int
    diagnostic: str = ""

    @property
    def rank_deficient(self) -> bool:
        return math.isnan(self.multi_ess)


def multi_ess(draws: np.ndarray, wall_clock_seconds: Optional[float] = None) -> EssReport:
    """Multivariate effective sample size of an (n, p) draw matrix.

    Requires n >= 4p and non-constant columns. When either determinant is
    non-positive the report carries NaN and a diagnostic instead of raising:
    downstream medians and tables treat it as a missing value.
    """
    draws = np.asarray(draws, dtype=float)
    if draws.ndim == 1:
        draws = draws[:, None]
    n_raw, p = draws.shape
    if n_raw < 4 * p:
        raise ValueError(f"need at least 4p = {4 * p} draws, got {n_raw}")

    b = int(math.floor(math.sqrt(n_raw)))
    a = n_raw // b
    n = a * b
    x = draws[:n]

    if np.any(np.ptp(x, axis=0) == 0.0):
        return EssReport(math.nan, math.nan, math.nan, n_raw, p, b, a, "constant column")

    centered = x - x.mean(axis=0)
    lam = (centered.T @ centered) / (n - 1)

    batch_means = x.reshape(a, b, p).mean(axis=1)
    bm_dev = batch_means - batch_means.mean(axis=0)
    sigma_bm = b * (bm_dev.T @ bm_dev) / (a - 1)

    sign_l, logdet_l = np.linalg.slogdet(lam)
    sign_s, logdet_s = np.linalg.slogdet(sigma_bm)
    if sign_l <= 0 or sign_s <= 0:
        return EssReport(
            math.nan, math.nan, math.nan, n_raw, p, b, a,
            "rank-deficient covariance (non-positive determinant)",
        )

    ess = n * math.exp((logdet_l - logdet_s) / p)
    per_iter = ess / n_raw
    per_sec = ess / wall_clock_seconds if wall_clock_seconds else math.nan
    return EssReport(ess, per_iter, per_sec, n_raw, p, b, a)


def mcse(draws: np.ndarray, ess: Optional[float] = None) -> np.ndarray:
    """Per-coordinate Monte Carlo standard error of the posterior mean.

    Derived from the multivariate ESS: column standard deviation divided by
    sqrt(multiESS).
    """
    draws = np.asarray(draws, dtype=float)
    if draws.ndim == 1:
        draws = draws[:, None]
    if ess is None:
        ess = multi_ess(draws).multi_ess
    return draws.std(axis=0, ddof=1) / math.sqrt(ess)


def acceptance_percentiles(stage2_probs: np.ndarray) -> tuple[float, float, float]:
    """(P25, P50, P75) of second-stage probabilities over promoted proposals.

    Linear interpolation between order statistics. Raises NoPromotions on an
    empty input.
    """
    vals = np.asarray(stage2_probs, dtype=float)
    vals = vals[~np.isnan(vals)]
    if vals.size == 0:
        raise NoPromotions("no promoted proposals to summarize")
    p25, p50, p75 = np.percentile(vals, [25.0, 50.0, 75.0])
    return float(p25), float(p50), float(p75)


def histogram(
    values: np.ndarray, n_bins: int = 20, value_range: tuple[float, float] = (0.0, 1.0)
) -> tuple[np.ndarray, np.ndarray]:
    """Relative-frequency histogram: (frequencies summing to 1, bin edges).

    The final bin includes its right edge, so probability mass at the upper
    range boundary (e.g. acceptance probabilities of exactly 1) lands in the
    last bin.
    """
    values = np.asarray(values, dtype=float)
    values = values[~np.isnan(values)]
    if values.size == 0:
        raise EmptyInput("cannot build a histogram from no values")
    lo, hi = value_range
    if not hi > lo:
        raise ValueError("histogram range must be increasing")
    counts, edges = np.histogram(values, bins=n_bins, range=value_range)
    return counts / values.size, edges


def thin_indices(n: int, ess: float, max_draws: int = 2000) -> np.ndarray:
    """Indices that thin a length-n chain to approximately independent draws.

    The spacing is the larger of the estimated autocorrelation time (n/ESS)
    and the spacing that caps the output at ``max_draws``.
    """
    if n < 1:
        raise EmptyInput("empty chain")
    effective = min(float(max_draws), ess) if math.isfinite(ess) and ess > 1.0 else float(max_draws)
    stride = max(1, math.ceil(n / effective))
    return np.arange(0, n, stride)
