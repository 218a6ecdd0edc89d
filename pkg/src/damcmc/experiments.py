"""Experiment orchestration: synthetic grid, acceptance-target sweep, the IV
benchmark, and the validation suite.

Replicate discipline: within a replicate every kernel runs on the same
dataset (dataset seed = seed_base + replicate, independent of kernel), and
chain seeds are derived from (seed_base, n, k, replicate, kernel) only, so a
sweep point at the default acceptance target reproduces the matching grid
cell bit for bit. Replicates can run in parallel worker processes, but
timing comparisons should use jobs=1 (the default) so wall clocks are not
contaminated.
"""

import logging
import math
import platform
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from typing import Optional

import numpy as np
import scipy
import scipy.stats

from . import __version__
from .data import load_iv_csv
from .diagnostics import acceptance_percentiles, histogram, multi_ess, thin_indices
from .errors import NoPromotions
from .models import (
    IvMomentModel,
    LinearRegressionMomentModel,
    default_prior,
    generate_synthetic,
)
from .posterior import PosteriorConfig
from .sampler import ChainTrace, SamplerConfig, run_chain
from .schemas import (
    AcceptSweepRequest,
    Alpha2Histogram,
    BetaHistogram,
    BetaSummary,
    CellSummary,
    IvReport,
    IvRequest,
    KsOverlap,
    Manifest,
    ReplicateRow,
    SweepReport,
    SynthGridReport,
    SynthGridRequest,
    ValidateRequest,
    ValidationCheck,
    ValidationReport,
)
from .validation import run_all_checks

logger = logging.getLogger(__name__)

KERNEL_CODE = {"standard": 0, "delayed": 1}
ALPHA2_HIST_BINS = 20
BETA_HIST_BINS = 60

_MASK64 = (1 << 64) - 1


_BUILD_ID: Optional[str] = None


def get_build_id() -> str:
    """git-describe style identifier of the running build, cached per process."""
    global _BUILD_ID
    if _BUILD_ID is None:
        try:
            out = subprocess.run(
                ["git", "describe", "--always", "--dirty", "--tags"],
                capture_output=True,
                text=True,
                timeout=5,
                check=True,
            )
            _BUILD_ID = out.stdout.strip() or f"damcmc-{__version__}"
        except Exception:
            _BUILD_ID = f"damcmc-{__version__}"
    return _BUILD_ID


def chain_seed_sequence(seed_base: int, n: int, k: int, replicate: int, kernel: str):
    """Deterministic per-chain seed; never depends on the acceptance target."""
    entropy = (
        seed_base & _MASK64,
        n & _MASK64,
        k & _MASK64,
        replicate & _MASK64,
        KERNEL_CODE[kernel],
    )
    return np.random.SeedSequence(entropy), f"({seed_base},{n},{k},{replicate},{kernel})"


def _posterior_config(opts) -> PosteriorConfig:
    return PosteriorConfig(
        omega=opts.omega,
        w_estimator=opts.w_estimator,
        temper_log_det=opts.temper_log_det,
    )


def _maybe(value: float) -> Optional[float]:
    return float(value) if math.isfinite(value) else None


def _row_from_trace(
    experiment: str,
    n: int,
    k: int,
    kernel: str,
    alpha_target: float,
    replicate: int,
    dataset_seed: Optional[int],
    chain_seed: str,
    trace: ChainTrace,
    opts,
) -> ReplicateRow:
    ess = multi_ess(trace.draws, trace.wall_clock_seconds)
    try:
        p25, p50, p75 = acceptance_percentiles(trace.stage2_probs())
    except NoPromotions:
        p25 = p50 = p75 = math.nan
    post_promoted = trace.promoted[trace.n_warmup:]
    return ReplicateRow(
        experiment=experiment,
        n=n,
        k=k,
        kernel=kernel,
        alpha_target=alpha_target,
        replicate=replicate,
        dataset_seed=dataset_seed,
        chain_seed=chain_seed,
        n_warmup=trace.n_warmup,
        n_draws=trace.draws.shape[0],
        multi_ess=_maybe(ess.multi_ess),
        ess_per_iter=_maybe(ess.ess_per_iter),
        ess_batch_size=ess.batch_size,
        ess_n_batches=ess.n_batches,
        accept_rate=trace.accept_rate,
        promotion_rate=float(post_promoted.mean()) if post_promoted.size else math.nan,
        n_full_evals=trace.counters.n_full_evals,
        n_mbar_evals=trace.counters.n_mbar_evals,
        n_cholesky=trace.counters.n_cholesky,
        p25_alpha2=_maybe(p25),
        p50_alpha2=_maybe(p50),
        p75_alpha2=_maybe(p75),
        omega=opts.omega,
        w_estimator=opts.w_estimator,
        build_id=get_build_id(),
        wall_clock_seconds=trace.wall_clock_seconds,
        ess_per_second=_maybe(ess.ess_per_second),
    )


def _alpha2_hist_counts(trace: ChainTrace) -> tuple[np.ndarray, int]:
    probs = trace.stage2_probs()
    if probs.size == 0:
        return np.zeros(ALPHA2_HIST_BINS, dtype=np.int64), 0
    counts, _ = np.histogram(probs, bins=ALPHA2_HIST_BINS, range=(0.0, 1.0))
    return counts, int(probs.size)


def _median_or_none(values: list[Optional[float]]) -> Optional[float]:
    present = [v for v in values if v is not None]
    return float(np.median(present)) if present else None


def _summarize_cells(experiment: str, rows: list[ReplicateRow]) -> list[CellSummary]:
    """Medians across replicates, grouped by (n, k, kernel, alpha_target)."""
    groups: dict[tuple, list[ReplicateRow]] = {}
    order: list[tuple] = []
    for row in rows:
        key = (row.n, row.k, row.kernel, row.alpha_target)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(row)
    cells = []
    for key in order:
        grp = groups[key]
        n, k, kernel, alpha = key
        cells.append(
            CellSummary(
                experiment=experiment,
                n=n,
                k=k,
                kernel=kernel,
                alpha_target=alpha,
                n_replicates=len(grp),
                median_multi_ess=_median_or_none([r.multi_ess for r in grp]),
                median_ess_per_iter=_median_or_none([r.ess_per_iter for r in grp]),
                median_p25_alpha2=_median_or_none([r.p25_alpha2 for r in grp]),
                median_p50_alpha2=_median_or_none([r.p50_alpha2 for r in grp]),
                median_p75_alpha2=_median_or_none([r.p75_alpha2 for r in grp]),
                median_wall_clock_seconds=_median_or_none(
                    [r.wall_clock_seconds for r in grp]
                ),
                median_ess_per_second=_median_or_none([r.ess_per_second for r in grp]),
            )
        )
    return cells


def _start_manifest() -> tuple[str, float]:
    return datetime.now(timezone.utc).isoformat(timespec="seconds"), time.perf_counter()


def _finish_manifest(started_at: str, t0: float) -> Manifest:
    return Manifest(
        package_version=__version__,
        build_id=get_build_id(),
        python=platform.python_version(),
        numpy=np.__version__,
        scipy=scipy.__version__,
        platform=platform.platform(),
        started_at=started_at,
        finished_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        total_seconds=time.perf_counter() - t0,
    )


def _map_tasks(fn, payloads: list[dict], jobs: int) -> list:
    """Run payloads serially or on a process pool, preserving input order."""
    if jobs <= 1 or len(payloads) <= 1:
        return [fn(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(fn, p) for p in payloads]
        return [f.result() for f in futures]


# ---------------------------------------------------------------------------
# Synthetic grid


def _synth_replicate_task(payload: dict) -> dict:
    """One (cell, replicate): run every requested kernel on a shared dataset."""
    req = SynthGridRequest.model_validate(payload["request"])
    n, k, replicate = payload["n"], payload["k"], payload["replicate"]
    dataset_seed = req.seed_base if req.fixed_dataset else req.seed_base + replicate
    data = generate_synthetic(n, k, seed=dataset_seed)
    model = LinearRegressionMomentModel.from_dataset(data)
    prior = default_prior(k)
    post_cfg = _posterior_config(req.posterior)

    rows = []
    hist_counts = np.zeros(ALPHA2_HIST_BINS, dtype=np.int64)
    hist_n = 0
    for kernel in req.kernels:
        seq, seed_label = chain_seed_sequence(req.seed_base, n, k, replicate, kernel)
        cfg = SamplerConfig(
            n_warmup=req.n_warmup,
            n_draws=req.n_draws,
            seed=seq,
            target_accept=req.alpha_target,
        )
        trace = run_chain(kernel, model, prior, cfg, post_cfg)
        rows.append(
            _row_from_trace(
                "synth_grid", n, k, kernel, req.alpha_target, replicate,
                dataset_seed, seed_label, trace, req.posterior,
            )
        )
        if kernel == "delayed":
            counts, cnt = _alpha2_hist_counts(trace)
            hist_counts += counts
            hist_n += cnt
    return {
        "rows": [r.model_dump() for r in rows],
        "hist_counts": hist_counts.tolist(),
        "hist_n": hist_n,
    }


def run_synth_grid(request: SynthGridRequest) -> SynthGridReport:
    """Run the kernel comparison over the (N, K) grid."""
    started_at, t0 = _start_manifest()
    req_payload = request.model_dump()
    rows: list[ReplicateRow] = []
    histograms: list[Alpha2Histogram] = []
    edges = np.linspace(0.0, 1.0, ALPHA2_HIST_BINS + 1)

    for n, k in request.grid:
        payloads = [
            {"request": req_payload, "n": n, "k": k, "replicate": rep}
            for rep in range(request.n_replicates)
        ]
        logger.info("synth grid cell (N=%d, K=%d): %d replicates", n, k, len(payloads))
        results = _map_tasks(_synth_replicate_task, payloads, request.jobs)
        cell_counts = np.zeros(ALPHA2_HIST_BINS, dtype=np.int64)
        cell_n = 0
        for res in results:
            rows.extend(ReplicateRow.model_validate(r) for r in res["rows"])
            cell_counts += np.asarray(res["hist_counts"], dtype=np.int64)
            cell_n += res["hist_n"]
        if cell_n:
            histograms.append(
                Alpha2Histogram(
                    n=n,
                    k=k,
                    alpha_target=request.alpha_target,
                    bin_edges=[float(e) for e in edges],
                    rel_freq=[float(c) / cell_n for c in cell_counts],
                    n_values=cell_n,
                )
            )

    cells = _summarize_cells("synth_grid", rows)
    return SynthGridReport(
        request=request,
        rows=rows,
        cells=cells,
        histograms=histograms,
        manifest=_finish_manifest(started_at, t0),
    )


# ---------------------------------------------------------------------------
# Acceptance-target sweep


def _sweep_replicate_task(payload: dict) -> dict:
    """One (cell, replicate): run a delayed chain per acceptance target."""
    req = AcceptSweepRequest.model_validate(payload["request"])
    n, k, replicate = payload["n"], payload["k"], payload["replicate"]
    dataset_seed = req.seed_base if req.fixed_dataset else req.seed_base + replicate
    data = generate_synthetic(n, k, seed=dataset_seed)
    model = LinearRegressionMomentModel.from_dataset(data)
    prior = default_prior(k)
    post_cfg = _posterior_config(req.posterior)

    rows = []
    for alpha in req.alpha_targets:
        seq, seed_label = chain_seed_sequence(req.seed_base, n, k, replicate, "delayed")
        cfg = SamplerConfig(
            n_warmup=req.n_warmup, n_draws=req.n_draws, seed=seq, target_accept=alpha
        )
        trace = run_chain("delayed", model, prior, cfg, post_cfg)
        rows.append(
            _row_from_trace(
                "accept_sweep", n, k, "delayed", alpha, replicate,
                dataset_seed, seed_label, trace, req.posterior,
            )
        )
    return {"rows": [r.model_dump() for r in rows]}


def run_accept_sweep(request: AcceptSweepRequest) -> SweepReport:
    """Sweep the target acceptance rate for the delayed kernel."""
    started_at, t0 = _start_manifest()
    req_payload = request.model_dump()
    rows: list[ReplicateRow] = []
    for n, k in request.grid:
        payloads = [
            {"request": req_payload, "n": n, "k": k, "replicate": rep}
            for rep in range(request.n_replicates)
        ]
        logger.info(
            "sweep cell (N=%d, K=%d): %d replicates x %d targets",
            n, k, len(payloads), len(request.alpha_targets),
        )
        results = _map_tasks(_sweep_replicate_task, payloads, request.jobs)
        for res in results:
            rows.extend(ReplicateRow.model_validate(r) for r in res["rows"])
    cells = _summarize_cells("accept_sweep", rows)
    return SweepReport(
        request=request, rows=rows, cells=cells, manifest=_finish_manifest(started_at, t0)
    )


# ---------------------------------------------------------------------------
# Instrumental-variable benchmark


def _iv_replicate_task(payload: dict) -> dict:
    req = IvRequest.model_validate(payload["request"])
    replicate = payload["replicate"]
    data = load_iv_csv(req.csv_path, req.column_map or None, req.normalize_latitude)
    model = IvMomentModel(data)
    prior = default_prior(model.param_dim)
    post_cfg = _posterior_config(req.posterior)

    rows = []
    beta: dict[str, dict] = {}
    for kernel in req.kernels:
        seq, seed_label = chain_seed_sequence(
            req.seed_base, model.sample_size, model.param_dim, replicate, kernel
        )
        cfg = SamplerConfig(
            n_warmup=req.n_warmup,
            n_draws=req.n_draws,
            seed=seq,
            target_accept=req.alpha_target,
        )
        trace = run_chain(kernel, model, prior, cfg, post_cfg)
        row = _row_from_trace(
            "iv", model.sample_size, model.param_dim, kernel, req.alpha_target,
            replicate, None, seed_label, trace, req.posterior,
        )
        rows.append(row)
        if payload["keep_beta"]:
            draws = trace.draws[:, 1]  # (intercept, treatment, controls...)
            ess = row.multi_ess if row.multi_ess is not None else math.nan
            beta[kernel] = {
                "summary": {
                    "kernel": kernel,
                    "mean": float(draws.mean()),
                    "sd": float(draws.std(ddof=1)),
                    "q05": float(np.percentile(draws, 5.0)),
                    "q95": float(np.percentile(draws, 95.0)),
                    "n_draws": int(draws.shape[0]),
                },
                "thinned": draws[thin_indices(draws.shape[0], ess)].tolist(),
                "draws": draws,
            }

    # Histograms share one range across kernels so the figures overlay.
    histograms = []
    if beta:
        lo = min(float(b["draws"].min()) for b in beta.values())
        hi = max(float(b["draws"].max()) for b in beta.values())
        span = (hi - lo) or 1.0
        lo -= 0.01 * span
        hi += 0.01 * span
        for kernel, b in beta.items():
            freq, edges = histogram(b["draws"], n_bins=BETA_HIST_BINS, value_range=(lo, hi))
            histograms.append(
                {
                    "kernel": kernel,
                    "bin_edges": [float(e) for e in edges],
                    "rel_freq": [float(f) for f in freq],
                }
            )
        for b in beta.values():
            del b["draws"]  # keep the task result picklable and small
    return {"rows": [r.model_dump() for r in rows], "beta": beta, "histograms": histograms}


def run_iv(request: IvRequest) -> IvReport:
    """Run the IV benchmark; the first replicate also produces the
    treatment-coefficient histograms and the cross-kernel overlap test."""
    started_at, t0 = _start_manifest()
    data = load_iv_csv(request.csv_path, request.column_map or None, request.normalize_latitude)
    sample_size = data.y.shape[0]
    req_payload = request.model_dump()
    payloads = [
        {"request": req_payload, "replicate": rep, "keep_beta": rep == 0}
        for rep in range(request.n_replicates)
    ]
    logger.info("IV benchmark: N=%d, %d replicate(s)", sample_size, len(payloads))
    results = _map_tasks(_iv_replicate_task, payloads, request.jobs)

    rows = [ReplicateRow.model_validate(r) for res in results for r in res["rows"]]
    beta = results[0]["beta"]

    summaries = [BetaSummary.model_validate(b["summary"]) for b in beta.values()]
    histograms = [BetaHistogram.model_validate(h) for h in results[0]["histograms"]]
    ks = None
    if "standard" in beta and "delayed" in beta:
        a = np.asarray(beta["standard"]["thinned"])
        b_ = np.asarray(beta["delayed"]["thinned"])
        stat, pval = scipy.stats.ks_2samp(a, b_)
        ks = KsOverlap(
            statistic=float(stat),
            p_value=float(pval),
            n_thinned_standard=int(a.shape[0]),
            n_thinned_delayed=int(b_.shape[0]),
        )

    cells = _summarize_cells("iv", rows)
    return IvReport(
        request=request,
        sample_size=sample_size,
        rows=rows,
        cells=cells,
        beta_summaries=summaries,
        beta_histograms=histograms,
        ks_overlap=ks,
        manifest=_finish_manifest(started_at, t0),
    )


# ---------------------------------------------------------------------------
# Validation suite


def run_toy_validate(request: ValidateRequest) -> ValidationReport:
    """Execute the oracle suite; check failures are report content, not errors."""
    started_at, t0 = _start_manifest()
    results = run_all_checks(
        seed=request.seed,
        inject_alpha2_bug=request.inject_alpha2_bug,
        constant_w_steps=request.constant_w_steps,
        gaussian_steps=request.gaussian_steps,
    )
    checks = [
        ValidationCheck(
            name=r.name,
            passed=r.passed,
            discrepancy=r.discrepancy if math.isfinite(r.discrepancy) else 1e300,
            tolerance=r.tolerance,
            detail=r.detail,
        )
        for r in results
    ]
    return ValidationReport(
        request=request,
        checks=checks,
        passed=all(c.passed for c in checks),
        manifest=_finish_manifest(started_at, t0),
    )
