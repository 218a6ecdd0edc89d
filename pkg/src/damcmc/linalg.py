"""Dense SPD linear algebra for the posterior: Cholesky factors, log-determinants,
quadratic forms through triangular solves, and empirical covariances.

The factorization and solve go straight to LAPACK (``dpotrf``/``dtrtrs``);
the high-level scipy wrappers cost several microseconds per call, which is
comparable to the entire surrogate evaluation for small problems.
"""

from typing import NamedTuple, Sequence

import numpy as np
from scipy.linalg import lapack

from .errors import (
    DimensionMismatch,
    InsufficientSamples,
    NonFiniteInput,
    NotPositiveDefinite,
)

_dpotrf = lapack.dpotrf
_dtrtrs = lapack.dtrtrs

# Escalating diagonal jitter, relative to mean(diag): near-singular weighting
# matrices at extreme proposals get three chances before we give up.
DEFAULT_JITTER_SCALES: tuple[float, ...] = (1e-10, 1e-8, 1e-6)


class CholFactor(NamedTuple):
    """Lower Cholesky factor of an SPD matrix plus the source log-determinant."""

    dim: int
    lower: np.ndarray
    log_det: float


def symmetrize(a: np.ndarray) -> np.ndarray:
    """Return the symmetric average (a + a.T) / 2."""
    return 0.5 * (a + a.T)


def cholesky(m: np.ndarray, jitter_scales: Sequence[float] = DEFAULT_JITTER_SCALES) -> CholFactor:
    """Factor a symmetric positive-definite matrix as L @ L.T.

    On breakdown, retries with ``lam * mean(diag) * I`` added to the diagonal
    for each ``lam`` in ``jitter_scales`` before raising.

    Raises
    ------
    NonFiniteInput
        If ``m`` contains NaN or Inf.
    NotPositiveDefinite
        If factorization fails after every jitter escalation.
    """
    if not np.isfinite(m).all():
        raise NonFiniteInput("matrix contains non-finite entries")
    c, info = _dpotrf(m, lower=1, clean=1)
    if info == 0:
        d = c.diagonal()
        if (d > 0.0).all():
            return CholFactor(m.shape[0], c, 2.0 * float(np.log(d).sum()))
    base = float(m.diagonal().mean())
    eye = np.eye(m.shape[0])
    for lam in jitter_scales:
        c, info = _dpotrf(m + (lam * base) * eye, lower=1, clean=1)
        if info == 0:
            d = c.diagonal()
            if (d > 0.0).all():
                return CholFactor(m.shape[0], c, 2.0 * float(np.log(d).sum()))
    raise NotPositiveDefinite(
        f"{m.shape[0]}x{m.shape[0]} matrix not positive definite after "
        f"{len(jitter_scales)} jitter escalations"
    )


def quad_form(f: CholFactor, v: np.ndarray) -> float:
    """Return v.T @ M^{-1} @ v for M = L @ L.T via one triangular solve.

    Solves L u = v and returns u @ u, so the result is nonnegative by
    construction.
    """
    if v.shape[0] != f.dim:
        raise DimensionMismatch(f"vector length {v.shape[0]} != factor dim {f.dim}")
    u, info = _dtrtrs(f.lower, v, lower=1)
    if info != 0:
        raise NotPositiveDefinite("triangular solve failed on a stored factor")
    return float(u @ u)


def empirical_cov(samples: np.ndarray, ridge: float = 0.0) -> np.ndarray:
    """Unbiased (n-1 divisor) sample covariance of row vectors, plus ridge * I.

    Raises InsufficientSamples for fewer than two rows.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2:
        raise DimensionMismatch("samples must be a 2-D array of row vectors")
    n = samples.shape[0]
    if n < 2:
        raise InsufficientSamples(f"need at least 2 samples, got {n}")
    dev = samples - samples.mean(axis=0)
    cov = (dev.T @ dev) / (n - 1)
    if ridge:
        cov = cov + ridge * np.eye(samples.shape[1])
    return symmetrize(cov)
