"""Request and response models for the experiment service.

These are the wire types: the FastAPI endpoints accept the ``*Request``
models and return the ``*Report`` models, and the CLI serializes reports to
CSV files. Floats that can legitimately be undefined (rank-deficient ESS,
missing timing) are Optional and carried as null rather than NaN so the
JSON stays standard.
"""

from typing import Literal, Optional

from pydantic import BaseModel, Field, field_validator

DEFAULT_GRID = [(100, 5), (100, 20), (1000, 5), (1000, 20)]
DEFAULT_SWEEP_TARGETS = [round(0.02 * i, 2) for i in range(1, 21)]

Kernel = Literal["standard", "delayed"]
WeightEstimator = Literal["centered", "uncentered"]


class PosteriorOptions(BaseModel):
    """Tempering and weighting-estimator switches echoed into every report row."""

    omega: float = Field(default=1.0, gt=0)
    w_estimator: WeightEstimator = "centered"
    temper_log_det: bool = True


class SynthGridRequest(BaseModel):
    """Kernel comparison on the synthetic heteroskedastic-regression grid."""

    grid: list[tuple[int, int]] = Field(default_factory=lambda: list(DEFAULT_GRID))
    n_replicates: int = Field(default=50, ge=1)
    n_warmup: int = Field(default=10_000, ge=0)
    n_draws: int = Field(default=10_000, ge=1)
    kernels: list[Kernel] = Field(default_factory=lambda: ["standard", "delayed"])
    alpha_target: float = Field(default=0.25, gt=0, lt=1)
    seed_base: int = 0
    posterior: PosteriorOptions = Field(default_factory=PosteriorOptions)
    fixed_dataset: bool = False
    jobs: int = Field(default=1, ge=1)

    @field_validator("grid")
    @classmethod
    def _check_grid(cls, grid):
        if not grid:
            raise ValueError("grid must contain at least one (n, k) cell")
        for n, k in grid:
            if k < 3:
                raise ValueError(f"synthetic cells need k >= 3, got ({n}, {k})")
            if n < 1:
                raise ValueError(f"cell sample size must be positive, got ({n}, {k})")
        return grid

    @field_validator("kernels")
    @classmethod
    def _check_kernels(cls, kernels):
        if not kernels:
            raise ValueError("at least one kernel is required")
        return kernels


class AcceptSweepRequest(BaseModel):
    """Target-acceptance-rate sweep: one delayed chain per (cell, target, replicate)."""

    grid: list[tuple[int, int]] = Field(default_factory=lambda: [(1000, 5)])
    alpha_targets: list[float] = Field(default_factory=lambda: list(DEFAULT_SWEEP_TARGETS))
    n_replicates: int = Field(default=50, ge=1)
    n_warmup: int = Field(default=10_000, ge=0)
    n_draws: int = Field(default=10_000, ge=1)
    seed_base: int = 0
    posterior: PosteriorOptions = Field(default_factory=PosteriorOptions)
    fixed_dataset: bool = False
    jobs: int = Field(default=1, ge=1)

    @field_validator("alpha_targets")
    @classmethod
    def _check_targets(cls, targets):
        if not targets:
            raise ValueError("alpha_targets must not be empty")
        for a in targets:
            if not 0.0 < a < 1.0:
                raise ValueError(f"alpha targets must lie in (0, 1), got {a}")
        return targets


class IvRequest(BaseModel):
    """Instrumental-variable benchmark on a user-supplied CSV (server-local path)."""

    csv_path: str
    column_map: dict[str, str] = Field(default_factory=dict)
    normalize_latitude: bool = False
    n_replicates: int = Field(default=1, ge=1)
    n_warmup: int = Field(default=100_000, ge=0)
    n_draws: int = Field(default=1_000_000, ge=1)
    kernels: list[Kernel] = Field(default_factory=lambda: ["standard", "delayed"])
    alpha_target: float = Field(default=0.25, gt=0, lt=1)
    seed_base: int = 0
    posterior: PosteriorOptions = Field(default_factory=PosteriorOptions)
    jobs: int = Field(default=1, ge=1)


class ValidateRequest(BaseModel):
    """Oracle-suite run; the bug flag exists to prove the harness can fail."""

    seed: int = 0
    inject_alpha2_bug: bool = False
    constant_w_steps: int = Field(default=100_000, ge=1000)
    gaussian_steps: int = Field(default=200_000, ge=1000)


class Manifest(BaseModel):
    """Environment and provenance attached to every report."""

    package_version: str
    build_id: str
    python: str
    numpy: str
    scipy: str
    platform: str
    started_at: str
    finished_at: str
    total_seconds: float


class ReplicateRow(BaseModel):
    """Per-chain results; timing fields are reported separately from the
    deterministic ones when written to CSV."""

    experiment: str
    n: int
    k: int
    kernel: Kernel
    alpha_target: float
    replicate: int
    dataset_seed: Optional[int] = None
    chain_seed: str
    n_warmup: int
    n_draws: int
    multi_ess: Optional[float] = None
    ess_per_iter: Optional[float] = None
    ess_batch_size: int
    ess_n_batches: int
    accept_rate: float
    promotion_rate: float
    n_full_evals: int
    n_mbar_evals: int
    n_cholesky: int
    p25_alpha2: Optional[float] = None
    p50_alpha2: Optional[float] = None
    p75_alpha2: Optional[float] = None
    omega: float
    w_estimator: str
    build_id: str
    wall_clock_seconds: float
    ess_per_second: Optional[float] = None


class CellSummary(BaseModel):
    """Medians across replicates for one (cell, kernel, alpha-target) group."""

    experiment: str
    n: int
    k: int
    kernel: Kernel
    alpha_target: float
    n_replicates: int
    median_multi_ess: Optional[float] = None
    median_ess_per_iter: Optional[float] = None
    median_p25_alpha2: Optional[float] = None
    median_p50_alpha2: Optional[float] = None
    median_p75_alpha2: Optional[float] = None
    median_wall_clock_seconds: Optional[float] = None
    median_ess_per_second: Optional[float] = None


class Alpha2Histogram(BaseModel):
    """Pooled relative frequencies of second-stage probabilities for one cell."""

    n: int
    k: int
    alpha_target: float
    bin_edges: list[float]
    rel_freq: list[float]
    n_values: int


class SynthGridReport(BaseModel):
    request: SynthGridRequest
    rows: list[ReplicateRow]
    cells: list[CellSummary]
    histograms: list[Alpha2Histogram]
    manifest: Manifest


class SweepReport(BaseModel):
    request: AcceptSweepRequest
    rows: list[ReplicateRow]
    cells: list[CellSummary]
    manifest: Manifest


class BetaSummary(BaseModel):
    """Posterior summary of the treatment coefficient for one kernel."""

    kernel: Kernel
    mean: float
    sd: float
    q05: float
    q95: float
    n_draws: int


class BetaHistogram(BaseModel):
    kernel: Kernel
    bin_edges: list[float]
    rel_freq: list[float]


class KsOverlap(BaseModel):
    """Two-sample KS test on thinned draws from the two kernels."""

    statistic: float
    p_value: float
    n_thinned_standard: int
    n_thinned_delayed: int


class IvReport(BaseModel):
    request: IvRequest
    sample_size: int
    rows: list[ReplicateRow]
    cells: list[CellSummary]
    beta_summaries: list[BetaSummary]
    beta_histograms: list[BetaHistogram]
    ks_overlap: Optional[KsOverlap] = None
    manifest: Manifest


class ValidationCheck(BaseModel):
    name: str
    passed: bool
    discrepancy: float
    tolerance: float
    detail: str = ""


class ValidationReport(BaseModel):
    request: ValidateRequest
    checks: list[ValidationCheck]
    passed: bool
    manifest: Manifest


class HealthResponse(BaseModel):
    status: str
    package_version: str
    build_id: str
