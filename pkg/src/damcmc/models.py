"""Moment models: the target problems the samplers run on.

A moment model bundles a dataset with a per-observation moment function
``m_i(theta)`` whose empirical mean should vanish at the estimand. Three
concrete models are provided:

* ``LinearRegressionMomentModel`` - quadratic-risk linear regression; the
  moment function is the gradient of the squared loss, so ``mbar`` equals
  the gradient of the empirical risk exactly.
* ``IvMomentModel`` - exactly-identified instrumental-variable regression
  (residual times instrument vector).
* ``ConstantMomentModel`` - a diagnostic target whose weighting matrix does
  not depend on theta, so the frozen-matrix surrogate is exact; with the
  right deviations it realizes an arbitrary Gaussian posterior.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionMismatch, InvalidDimension
from .linalg import symmetrize

WEIGHT_ESTIMATORS = ("centered", "uncentered")

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class GaussianPrior:
    """Isotropic normal prior with scalar standard deviation."""

    mean: np.ndarray
    sd: float

    def __post_init__(self):
        if self.sd <= 0:
            raise ValueError("prior sd must be positive")
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float))

    def log_density(self, theta: np.ndarray) -> float:
        """Joint log-density at theta, normalizing constants included."""
        d = theta - self.mean
        k = d.shape[0]
        return -0.5 * k * _LOG_2PI - k * float(np.log(self.sd)) - 0.5 * float(d @ d) / (self.sd * self.sd)


def default_prior(k: int, sd: float = 100.0) -> GaussianPrior:
    """Zero-mean isotropic prior used by both benchmark problems."""
    return GaussianPrior(np.zeros(k), sd)


@dataclass(frozen=True)
class SyntheticDataset:
    """Heteroskedastic regression draw: responses y and design X (intercept first)."""

    y: np.ndarray
    x: np.ndarray
    theta_true: np.ndarray
    noise_sd: np.ndarray
    seed: int


def generate_synthetic(n: int, k: int, seed: int) -> SyntheticDataset:
    """Simulate the heteroskedastic linear-regression benchmark problem.

    The design has an intercept column of ones followed by k-1 iid standard
    normal covariates; the response noise variance is
    ``(1 + x2^2 + x3^2) / 3`` so the model is heteroskedastic, and the true
    coefficients are (1, 1, 1, 0, ..., 0).
    """
    if k < 3:
        raise InvalidDimension(f"synthetic design needs k >= 3, got {k}")
    if n < 1:
        raise InvalidDimension(f"need a positive sample size, got {n}")
    rng = np.random.default_rng(seed)
    x = np.empty((n, k))
    x[:, 0] = 1.0
    x[:, 1:] = rng.standard_normal((n, k - 1))
    theta_true = np.zeros(k)
    theta_true[:3] = 1.0
    noise_var = (1.0 + x[:, 1] ** 2 + x[:, 2] ** 2) / 3.0
    noise_sd = np.sqrt(noise_var)
    y = x @ theta_true + noise_sd * rng.standard_normal(n)
    return SyntheticDataset(y=y, x=x, theta_true=theta_true, noise_sd=noise_sd, seed=seed)


def weight_from_contributions(contribs: np.ndarray, estimator: str = "centered") -> np.ndarray:
    """Second-moment estimate of the moment contributions (divisor N).

    ``centered`` subtracts the column mean first (default: the safer choice
    away from the solution, where the mean moment is far from zero);
    ``uncentered`` is the raw average of outer products.
    """
    n = contribs.shape[0]
    if estimator == "centered":
        dev = contribs - contribs.mean(axis=0)
        w = dev.T @ dev
    elif estimator == "uncentered":
        w = contribs.T @ contribs
    else:
        raise ValueError(f"unknown weight estimator {estimator!r}")
    w /= n
    return symmetrize(w)


class MomentModel:
    """Base class: subclasses fill in ``moment_contributions``.

    Attributes ``param_dim``, ``moment_dim`` and ``sample_size`` describe the
    problem; all methods are read-only and safe to call concurrently.
    """

    param_dim: int
    moment_dim: int
    sample_size: int

    def moment_contributions(self, theta: np.ndarray) -> np.ndarray:
        """Per-observation moment rows, shape (sample_size, moment_dim)."""
        raise NotImplementedError

    def mbar(self, theta: np.ndarray) -> np.ndarray:
        """Column mean of the moment contributions.

        Subclasses may provide a cheaper equivalent; the delayed-acceptance
        first stage calls this without materializing the contribution matrix.
        """
        return self.moment_contributions(theta).mean(axis=0)

    def weight_matrix(self, theta: np.ndarray, estimator: str = "centered") -> np.ndarray:
        """Estimated covariance of sqrt(N) * mbar(theta)."""
        return weight_from_contributions(self.moment_contributions(theta), estimator)

    def initial_point(self) -> Optional[np.ndarray]:
        """Point estimate to start chains from, or None when unavailable.

        Moment-criterion posteriors concentrate around the criterion
        minimizer; starting there keeps the warmup budget for tuning the
        proposal instead of for a long drift across a near-zero-density
        region (where the weighting matrix can also be ill-conditioned).
        """
        return None

    def _check_theta(self, theta: np.ndarray) -> None:
        if theta.shape[0] != self.param_dim:
            raise DimensionMismatch(
                f"theta has length {theta.shape[0]}, model expects {self.param_dim}"
            )


class LinearRegressionMomentModel(MomentModel):
    """Quadratic-loss regression: row i of the moments is -2 (y_i - theta'x_i) x_i.

    With this scaling ``mbar`` is exactly the gradient of the empirical risk
    ``mean((y - X theta)^2)``; dropping the factor 2 would rescale the
    posterior spread.
    """

    def __init__(self, x: np.ndarray, y: np.ndarray):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
            raise DimensionMismatch("x must be (n, k) and y (n,) with matching n")
        self.x = x
        self.y = y
        self.sample_size, self.param_dim = x.shape
        self.moment_dim = self.param_dim

    @classmethod
    def from_dataset(cls, data: SyntheticDataset) -> "LinearRegressionMomentModel":
        return cls(data.x, data.y)

    def moment_contributions(self, theta: np.ndarray) -> np.ndarray:
        resid = self.y - self.x @ theta
        return self.x * ((-2.0) * resid)[:, None]

    def mbar(self, theta: np.ndarray) -> np.ndarray:
        resid = self.y - self.x @ theta
        out = self.x.T @ resid
        out *= -2.0 / self.sample_size
        return out

    def risk(self, theta: np.ndarray) -> float:
        """Empirical quadratic risk mean((y - X theta)^2); mbar is its gradient."""
        resid = self.y - self.x @ theta
        return float(resid @ resid) / self.sample_size

    def initial_point(self) -> np.ndarray:
        """Least-squares solution (the minimizer of the empirical risk)."""
        return np.linalg.lstsq(self.x, self.y, rcond=None)[0]


@dataclass(frozen=True)
class IvDataset:
    """Instrumental-variable data: outcome, treatment, instrument, raw controls.

    ``controls`` excludes the constant; the model prepends it, so with the
    benchmark control set (latitude plus three continent dummies) the
    parameter vector is (intercept, treatment effect, four control slopes).
    """

    y: np.ndarray
    x: np.ndarray
    z: np.ndarray
    controls: np.ndarray
    control_names: tuple = ()


class IvMomentModel(MomentModel):
    """Exactly identified IV regression.

    Row i of the moments is the structural residual times the instrument
    vector (z_i, 1, controls_i), so the moment dimension equals the number
    of parameters.
    """

    def __init__(self, data: IvDataset):
        n = data.y.shape[0]
        w = np.column_stack([np.ones(n), data.controls])
        self.regressors = np.column_stack([np.ones(n), data.x, data.controls])
        self.instruments = np.column_stack([data.z, w])
        self.y = np.asarray(data.y, dtype=float)
        self.sample_size = n
        self.param_dim = self.regressors.shape[1]
        self.moment_dim = self.instruments.shape[1]

    def moment_contributions(self, theta: np.ndarray) -> np.ndarray:
        resid = self.y - self.regressors @ theta
        return self.instruments * resid[:, None]

    def mbar(self, theta: np.ndarray) -> np.ndarray:
        resid = self.y - self.regressors @ theta
        return (self.instruments.T @ resid) / self.sample_size

    def gmm_solution(self) -> np.ndarray:
        """Parameter value solving the exactly-identified moment equations."""
        zq = self.instruments.T @ self.regressors
        zy = self.instruments.T @ self.y
        return np.linalg.solve(zq, zy)

    def initial_point(self) -> np.ndarray:
        return self.gmm_solution()


class ConstantMomentModel(MomentModel):
    """Moment rows (theta - mu0) + d_i with fixed, centered deviations d_i.

    The centered weighting matrix then never depends on theta (it is stored
    once and returned verbatim), which makes the surrogate posterior exact:
    every promoted proposal is accepted at the second stage. Only the
    centered weight estimator keeps this property.
    """

    def __init__(self, mu0: np.ndarray, deviations: np.ndarray):
        mu0 = np.asarray(mu0, dtype=float)
        deviations = np.asarray(deviations, dtype=float)
        deviations = deviations - deviations.mean(axis=0)
        if deviations.shape[1] != mu0.shape[0]:
            raise DimensionMismatch("deviation columns must match len(mu0)")
        self.mu0 = mu0
        self.deviations = deviations
        self.sample_size = deviations.shape[0]
        self.param_dim = self.moment_dim = mu0.shape[0]
        self._weight = weight_from_contributions(deviations, "centered")

    @classmethod
    def gaussian_target(
        cls, mu0: np.ndarray, cov0: np.ndarray, n_obs: int = 16, seed: int = 0
    ) -> "ConstantMomentModel":
        """Build deviations so the quasi-posterior kernel is N(mu0, cov0).

        Requires the weighting matrix to equal ``n_obs * cov0``; the random
        centered deviations are linearly transformed to hit it exactly.
        """
        mu0 = np.asarray(mu0, dtype=float)
        cov0 = np.asarray(cov0, dtype=float)
        k = mu0.shape[0]
        rng = np.random.default_rng(seed)
        z = rng.standard_normal((n_obs, k))
        z -= z.mean(axis=0)
        s = z.T @ z
        ls = np.linalg.cholesky(s)
        lt = np.linalg.cholesky(float(n_obs) ** 2 * cov0)
        # D = Z ls^{-T} lt^T gives D^T D = lt ls^{-1} S ls^{-T} lt^T = n^2 cov0
        d = z @ np.linalg.solve(ls.T, lt.T)
        return cls(mu0, d)

    def moment_contributions(self, theta: np.ndarray) -> np.ndarray:
        return (theta - self.mu0) + self.deviations

    def mbar(self, theta: np.ndarray) -> np.ndarray:
        return theta - self.mu0

    def weight_matrix(self, theta: np.ndarray, estimator: str = "centered") -> np.ndarray:
        if estimator == "centered":
            return self._weight
        return super().weight_matrix(theta, estimator)

    def initial_point(self) -> np.ndarray:
        return self.mu0.copy()
