"""CSV and JSON emission for experiment reports.

Timing columns (wall clock, ESS per second) live in separate files from the
deterministic results so that two runs of the same request produce
byte-identical result CSVs. Floats are written with shortest round-trip
formatting; missing values are empty cells.
"""

import csv
import json
from pathlib import Path

from .schemas import IvReport, SweepReport, SynthGridReport, ValidationReport

KEY_COLUMNS = ["experiment", "n", "k", "kernel", "alpha_target", "replicate"]

RESULT_COLUMNS = KEY_COLUMNS + [
    "dataset_seed",
    "chain_seed",
    "n_warmup",
    "n_draws",
    "multi_ess",
    "ess_per_iter",
    "ess_batch_size",
    "ess_n_batches",
    "accept_rate",
    "promotion_rate",
    "n_full_evals",
    "n_mbar_evals",
    "n_cholesky",
    "p25_alpha2",
    "p50_alpha2",
    "p75_alpha2",
    "omega",
    "w_estimator",
    "build_id",
]

TIMING_COLUMNS = KEY_COLUMNS + ["wall_clock_seconds", "ess_per_second"]

MEDIAN_COLUMNS = [
    "experiment",
    "n",
    "k",
    "kernel",
    "alpha_target",
    "n_replicates",
    "median_multi_ess",
    "median_ess_per_iter",
    "median_p25_alpha2",
    "median_p50_alpha2",
    "median_p75_alpha2",
]

TIMING_MEDIAN_COLUMNS = [
    "experiment",
    "n",
    "k",
    "kernel",
    "alpha_target",
    "median_wall_clock_seconds",
    "median_ess_per_second",
]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, columns: list[str], records: list[dict]) -> Path:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for rec in records:
            writer.writerow([_cell(rec.get(col)) for col in columns])
    return path


def _write_json(path: Path, payload) -> Path:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def _rows(report) -> list[dict]:
    return [r.model_dump() for r in report.rows]


def _cells(report) -> list[dict]:
    return [c.model_dump() for c in report.cells]


def _manifest_payload(report) -> dict:
    return {
        "request": report.request.model_dump(),
        "manifest": report.manifest.model_dump(),
    }


def _histogram_records(histograms) -> list[dict]:
    records = []
    for h in histograms:
        data = h.model_dump()
        edges = data.pop("bin_edges")
        freqs = data.pop("rel_freq")
        for left, right, freq in zip(edges[:-1], edges[1:], freqs):
            rec = dict(data)
            rec.update(bin_left=left, bin_right=right, rel_freq=freq)
            records.append(rec)
    return records


def write_synth_grid_report(report: SynthGridReport, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [
        _write_csv(out / "results.csv", RESULT_COLUMNS, _rows(report)),
        _write_csv(out / "medians.csv", MEDIAN_COLUMNS, _cells(report)),
        _write_csv(out / "timings.csv", TIMING_COLUMNS, _rows(report)),
        _write_csv(out / "timing_medians.csv", TIMING_MEDIAN_COLUMNS, _cells(report)),
        _write_csv(
            out / "alpha2_histograms.csv",
            ["n", "k", "alpha_target", "bin_left", "bin_right", "rel_freq", "n_values"],
            _histogram_records(report.histograms),
        ),
        _write_json(out / "manifest.json", _manifest_payload(report)),
    ]
    return written


def write_sweep_report(report: SweepReport, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return [
        _write_csv(out / "sweep_results.csv", RESULT_COLUMNS, _rows(report)),
        _write_csv(out / "sweep_medians.csv", MEDIAN_COLUMNS, _cells(report)),
        _write_csv(out / "sweep_timings.csv", TIMING_COLUMNS, _rows(report)),
        _write_csv(out / "sweep_timing_medians.csv", TIMING_MEDIAN_COLUMNS, _cells(report)),
        _write_json(out / "manifest.json", _manifest_payload(report)),
    ]


def write_iv_report(report: IvReport, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = {
        "sample_size": report.sample_size,
        "beta_summaries": [b.model_dump() for b in report.beta_summaries],
        "ks_overlap": report.ks_overlap.model_dump() if report.ks_overlap else None,
    }
    return [
        _write_csv(out / "results.csv", RESULT_COLUMNS, _rows(report)),
        _write_csv(out / "medians.csv", MEDIAN_COLUMNS, _cells(report)),
        _write_csv(out / "timings.csv", TIMING_COLUMNS, _rows(report)),
        _write_csv(out / "timing_medians.csv", TIMING_MEDIAN_COLUMNS, _cells(report)),
        _write_csv(
            out / "beta_histograms.csv",
            ["kernel", "bin_left", "bin_right", "rel_freq"],
            _histogram_records(report.beta_histograms),
        ),
        _write_json(out / "iv_summary.json", summary),
        _write_json(out / "manifest.json", _manifest_payload(report)),
    ]


def write_validation_report(report: ValidationReport, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return [
        _write_json(
            out / "validation.json",
            {
                "passed": report.passed,
                "checks": [c.model_dump() for c in report.checks],
                "request": report.request.model_dump(),
                "manifest": report.manifest.model_dump(),
            },
        )
    ]
