"""HTTP service exposing the experiment runners.

Endpoints are synchronous: a request runs the experiment in the worker and
returns the full report. Long experiments (the IV defaults run around a
million iterations per kernel) need clients with generous or disabled read
timeouts; the packaged CLI disables them.
"""

from fastapi import FastAPI, HTTPException

from . import __version__
from .data import load_iv_csv  # noqa: F401  (re-exported for service users)
from .errors import DamcmcError
from .experiments import get_build_id, run_accept_sweep, run_iv, run_synth_grid, run_toy_validate
from .schemas import (
    AcceptSweepRequest,
    HealthResponse,
    IvReport,
    IvRequest,
    SweepReport,
    SynthGridReport,
    SynthGridRequest,
    ValidateRequest,
    ValidationReport,
)


def create_app() -> FastAPI:
    app = FastAPI(
        title="damcmc",
        version=__version__,
        description=(
            "Posterior-sampling benchmarks comparing standard adaptive "
            "Metropolis-Hastings with the delayed-acceptance variant on "
            "moment-criterion posteriors."
        ),
    )

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", package_version=__version__, build_id=get_build_id())

    @app.post("/experiments/synth-grid", response_model=SynthGridReport)
    def synth_grid(request: SynthGridRequest) -> SynthGridReport:
        return run_synth_grid(request)

    @app.post("/experiments/accept-sweep", response_model=SweepReport)
    def accept_sweep(request: AcceptSweepRequest) -> SweepReport:
        return run_accept_sweep(request)

    @app.post("/experiments/iv", response_model=IvReport)
    def iv(request: IvRequest) -> IvReport:
        try:
            return run_iv(request)
        except FileNotFoundError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except DamcmcError as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    @app.post("/validate", response_model=ValidationReport)
    def validate(request: ValidateRequest) -> ValidationReport:
        return run_toy_validate(request)

    return app


app = create_app()
