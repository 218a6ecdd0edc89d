"""Command-line client for the experiment service.

Subcommands mirror the service endpoints: ``synth-grid``, ``accept-sweep``,
``iv`` and ``validate``, plus ``serve`` to launch the HTTP server. By
default requests run against the application in-process; pass ``--server
URL`` to target a running instance instead (file paths in ``iv`` are then
resolved on the server).

Options may also come from a JSON config file (flat object whose keys are
the long option names with dashes replaced by underscores, e.g.
``{"replicates": 10, "alpha_target": 0.3}``); explicit command-line flags
win on conflict.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import httpx

from .schemas import (
    AcceptSweepRequest,
    IvRequest,
    SynthGridRequest,
    SweepReport,
    SynthGridReport,
    IvReport,
    ValidateRequest,
    ValidationReport,
)
from .reports import (
    write_iv_report,
    write_sweep_report,
    write_synth_grid_report,
    write_validation_report,
)

logger = logging.getLogger("damcmc")


def _make_client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=httpx.Timeout(None, connect=30.0))
    # In-process transport against the same app the server would run.
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # starlette warns about its test transport
        from fastapi.testclient import TestClient

    from .service import app

    return TestClient(app)


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise SystemExit(f"config file {path} must contain a JSON object")
    return cfg


def _merged(args: argparse.Namespace, config: dict, mapping: dict[str, str]) -> dict:
    """Request payload from config-file values overlaid with explicit flags.

    ``mapping`` maps config/flag names to request field names; flags parsed
    as None count as absent so pydantic defaults apply.
    """
    payload: dict = {}
    for name, field in mapping.items():
        if name in config and config[name] is not None:
            payload[field] = config[name]
    for name, field in mapping.items():
        value = getattr(args, name.replace("-", "_"), None)
        if value is not None:
            payload[field] = value
    return payload


def _kernels(value: str | None) -> list[str] | None:
    if value is None:
        return None
    if value == "both":
        return ["standard", "delayed"]
    return [value]


def _grid(ns, ks) -> list[tuple[int, int]] | None:
    if ns is None and ks is None:
        return None
    ns = ns or [100, 1000]
    ks = ks or [5, 20]
    return [(n, k) for n in ns for k in ks]


def _post(client: httpx.Client, path: str, payload: dict) -> dict:
    resp = client.post(path, json=payload)
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail", resp.text)
        except Exception:
            detail = resp.text
        raise SystemExit(f"request failed ({resp.status_code}): {detail}")
    return resp.json()


def _print_cells(cells) -> None:
    header = f"{'N':>6} {'K':>4} {'kernel':>9} {'alpha':>6} {'ESS/iter':>10} {'ESS/s':>10} {'P50 a2':>8}"
    print(header)
    for c in cells:
        ess_iter = f"{c.median_ess_per_iter:.4f}" if c.median_ess_per_iter is not None else "-"
        ess_s = f"{c.median_ess_per_second:.1f}" if c.median_ess_per_second is not None else "-"
        p50 = f"{c.median_p50_alpha2:.3f}" if c.median_p50_alpha2 is not None else "-"
        print(f"{c.n:>6} {c.k:>4} {c.kernel:>9} {c.alpha_target:>6.2f} {ess_iter:>10} {ess_s:>10} {p50:>8}")


COMMON_FIELDS = {
    "replicates": "n_replicates",
    "warmup": "n_warmup",
    "draws": "n_draws",
    "seed": "seed_base",
    "jobs": "jobs",
}


def _posterior_payload(args, config) -> dict | None:
    opts = {}
    for name, field in (("omega", "omega"), ("w-estimator", "w_estimator")):
        key = name.replace("-", "_")
        if config.get(key) is not None:
            opts[field] = config[key]
        if getattr(args, key, None) is not None:
            opts[field] = getattr(args, key)
    return opts or None


def cmd_synth_grid(args) -> int:
    config = _load_config(args.config)
    payload = _merged(args, config, COMMON_FIELDS | {"alpha-target": "alpha_target"})
    grid = _grid(args.n, args.k) or config.get("grid")
    if grid is not None:
        payload["grid"] = grid
    kernels = _kernels(args.kernel) or config.get("kernels")
    if kernels is not None:
        payload["kernels"] = kernels
    if args.fixed_dataset or config.get("fixed_dataset"):
        payload["fixed_dataset"] = True
    posterior = _posterior_payload(args, config)
    if posterior:
        payload["posterior"] = posterior
    request = SynthGridRequest.model_validate(payload)

    with _make_client(args.server) as client:
        report = SynthGridReport.model_validate(
            _post(client, "/experiments/synth-grid", request.model_dump())
        )
    written = write_synth_grid_report(report, args.out)
    _print_cells(report.cells)
    for path in written:
        logger.info("wrote %s", path)
    return 0


def cmd_accept_sweep(args) -> int:
    config = _load_config(args.config)
    payload = _merged(args, config, COMMON_FIELDS)
    grid = _grid(args.n, args.k) or config.get("grid")
    if grid is not None:
        payload["grid"] = grid
    targets = args.alpha_target or config.get("alpha_targets")
    if targets is not None:
        payload["alpha_targets"] = targets
    if args.fixed_dataset or config.get("fixed_dataset"):
        payload["fixed_dataset"] = True
    posterior = _posterior_payload(args, config)
    if posterior:
        payload["posterior"] = posterior
    request = AcceptSweepRequest.model_validate(payload)

    with _make_client(args.server) as client:
        report = SweepReport.model_validate(
            _post(client, "/experiments/accept-sweep", request.model_dump())
        )
    written = write_sweep_report(report, args.out)
    _print_cells(report.cells)
    for path in written:
        logger.info("wrote %s", path)
    return 0


def cmd_iv(args) -> int:
    config = _load_config(args.config)
    payload = _merged(args, config, COMMON_FIELDS | {"alpha-target": "alpha_target", "data": "csv_path"})
    kernels = _kernels(args.kernel) or config.get("kernels")
    if kernels is not None:
        payload["kernels"] = kernels
    colmap = dict(config.get("column_map") or {})
    for spec in args.col or []:
        field, _, column = spec.partition("=")
        if not column:
            raise SystemExit(f"--col expects field=column, got {spec!r}")
        colmap[field] = column
    if colmap:
        payload["column_map"] = colmap
    if args.normalize_latitude or config.get("normalize_latitude"):
        payload["normalize_latitude"] = True
    posterior = _posterior_payload(args, config)
    if posterior:
        payload["posterior"] = posterior
    if "csv_path" not in payload:
        raise SystemExit("iv requires --data PATH (or csv_path/data in the config file)")
    request = IvRequest.model_validate(payload)

    with _make_client(args.server) as client:
        report = IvReport.model_validate(_post(client, "/experiments/iv", request.model_dump()))
    written = write_iv_report(report, args.out)
    print(f"sample size: {report.sample_size}")
    _print_cells(report.cells)
    for b in report.beta_summaries:
        print(
            f"beta[{b.kernel}]: mean={b.mean:.4f} sd={b.sd:.4f} "
            f"90% interval [{b.q05:.4f}, {b.q95:.4f}]"
        )
    if report.ks_overlap:
        k = report.ks_overlap
        print(f"KS overlap on thinned beta draws: stat={k.statistic:.4f} p={k.p_value:.4f}")
    for path in written:
        logger.info("wrote %s", path)
    return 0


def cmd_validate(args) -> int:
    config = _load_config(args.config)
    payload = _merged(
        args,
        config,
        {
            "seed": "seed",
            "constant-w-steps": "constant_w_steps",
            "gaussian-steps": "gaussian_steps",
        },
    )
    if args.inject_alpha2_bug or config.get("inject_alpha2_bug"):
        payload["inject_alpha2_bug"] = True
    request = ValidateRequest.model_validate(payload)

    with _make_client(args.server) as client:
        report = ValidationReport.model_validate(_post(client, "/validate", request.model_dump()))
    if args.out:
        for path in write_validation_report(report, args.out):
            logger.info("wrote %s", path)
    print(f"{'check':<32} {'status':<6} {'discrepancy':>12} {'tolerance':>10}")
    for c in report.checks:
        status = "pass" if c.passed else "FAIL"
        print(f"{c.name:<32} {status:<6} {c.discrepancy:>12.3e} {c.tolerance:>10.1e}  {c.detail}")
    print("validation:", "PASS" if report.passed else "FAIL")
    return 0 if report.passed else 2


def cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("damcmc.service:app", host=args.host, port=args.port, log_level="info")
    return 0


def _add_common(parser: argparse.ArgumentParser, with_kernel: bool = True) -> None:
    parser.add_argument("--warmup", type=int, help="warmup iterations per chain")
    parser.add_argument("--draws", type=int, help="retained draws per chain")
    parser.add_argument("--replicates", type=int, help="independent replicate runs")
    parser.add_argument("--seed", type=int, help="base seed for datasets and chains")
    parser.add_argument("--omega", type=float, help="posterior tempering exponent")
    parser.add_argument("--w-estimator", choices=["centered", "uncentered"],
                        help="weighting-matrix estimator")
    parser.add_argument("--jobs", type=int,
                        help="parallel replicate workers (keep 1 for timing runs)")
    if with_kernel:
        parser.add_argument("--kernel", choices=["standard", "delayed", "both"],
                            help="which sampler(s) to run")
    parser.add_argument("--config", help="JSON config file; flags win on conflict")
    parser.add_argument("--server", help="base URL of a running service "
                                         "(default: run in-process)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="damcmc",
        description="Benchmarks for delayed-acceptance MCMC on moment-criterion posteriors",
    )
    parser.add_argument("--quiet", action="store_true", help="suppress progress logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth-grid", help="kernel comparison on the synthetic grid")
    p.add_argument("--n", type=int, action="append", help="sample size (repeatable)")
    p.add_argument("--k", type=int, action="append", help="parameter count (repeatable)")
    p.add_argument("--alpha-target", type=float, help="target acceptance rate")
    p.add_argument("--fixed-dataset", action="store_true",
                   help="reuse one dataset across replicates")
    _add_common(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth_grid)

    p = sub.add_parser("accept-sweep", help="sweep the target acceptance rate (delayed kernel)")
    p.add_argument("--n", type=int, action="append", help="sample size (repeatable)")
    p.add_argument("--k", type=int, action="append", help="parameter count (repeatable)")
    p.add_argument("--alpha-target", type=float, action="append",
                   help="target acceptance rate (repeatable)")
    p.add_argument("--fixed-dataset", action="store_true",
                   help="reuse one dataset across replicates")
    _add_common(p, with_kernel=False)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_accept_sweep)

    p = sub.add_parser("iv", help="instrumental-variable benchmark from a CSV file")
    p.add_argument("--data", help="path to the dataset CSV")
    p.add_argument("--col", action="append", metavar="FIELD=COLUMN",
                   help="column mapping override (repeatable); fields: "
                        "y x z latitude africa asia other_cont")
    p.add_argument("--normalize-latitude", action="store_true",
                   help="apply abs(latitude)/90 after ingestion")
    p.add_argument("--alpha-target", type=float, help="target acceptance rate")
    _add_common(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_iv)

    p = sub.add_parser("validate", help="run the sampler oracle suite")
    p.add_argument("--seed", type=int, help="seed for the oracle suite")
    p.add_argument("--inject-alpha2-bug", action="store_true",
                   help="flip the sign of the second-stage ratio to prove the "
                        "detailed-balance check can fail")
    p.add_argument("--constant-w-steps", type=int, help="constant-W chain length")
    p.add_argument("--gaussian-steps", type=int, help="Gaussian-target chain length")
    p.add_argument("--config", help="JSON config file; flags win on conflict")
    p.add_argument("--server", help="base URL of a running service")
    p.add_argument("--out", help="optional output directory for validation.json")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        datefmt="%H:%M:%S",
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
