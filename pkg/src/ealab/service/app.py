"""FastAPI application exposing runs, sweeps, oracles, drift checks and verify.

Start with: uvicorn ealab.service.app:app
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..instance_files import InstanceFormatError
from ..oracle import EnumerationCapError, SingularChainError
from ..problems import UnknownOptimumError
from . import handlers, schemas

app = FastAPI(title="ealab", version=__version__)

_CLIENT_ERRORS = (
    ValueError,
    InstanceFormatError,
    EnumerationCapError,
    UnknownOptimumError,
    SingularChainError,
)


@app.exception_handler(ValueError)
@app.exception_handler(UnknownOptimumError)
@app.exception_handler(SingularChainError)
async def _client_error(request: Request, exc: Exception) -> JSONResponse:
    return JSONResponse(status_code=422, content={"detail": str(exc)})


@app.get("/health", response_model=schemas.HealthResponse)
def health() -> schemas.HealthResponse:
    return schemas.HealthResponse(status="ok", version=__version__)


@app.post("/run", response_model=schemas.RunResponse)
def run(req: schemas.RunRequest) -> schemas.RunResponse:
    return handlers.run_handler(req)


@app.post("/sweep", response_model=schemas.SweepResponse)
def sweep(req: schemas.SweepRequest) -> schemas.SweepResponse:
    return handlers.sweep_handler(req)


@app.post("/oracle/efht", response_model=schemas.EfhtResponse)
def oracle_efht(req: schemas.EfhtRequest) -> schemas.EfhtResponse:
    return handlers.efht_handler(req)


@app.post("/oracle/brute", response_model=schemas.BruteResponse)
def oracle_brute(req: schemas.BruteRequest) -> schemas.BruteResponse:
    return handlers.brute_handler(req)


@app.post("/drift", response_model=schemas.DriftResponse)
def drift(req: schemas.DriftRequest) -> schemas.DriftResponse:
    return handlers.drift_handler(req)


@app.post("/verify", response_model=schemas.VerifyResponse)
def verify(req: schemas.VerifyRequest) -> schemas.VerifyResponse:
    return handlers.verify_handler(req)
