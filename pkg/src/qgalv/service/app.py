"""FastAPI application exposing the five batch commands.

Statistical outcomes (oracle agreement, discrepancy-principle success)
are data, not errors: they come back as response flags and the client
decides what to do with them.  Validation and numerical failures map to
HTTP status codes with a machine-readable error_type.
"""

from __future__ import annotations

import warnings as _warnings

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..config import ScenarioConfig, parse_scenario
from ..errors import NumericalError, StatisticalError, ValidationError
from ..pipeline import (CommandOutput, run_estimate, run_invert, run_kernel,
                        run_oracle, run_scan)
from ..tables import parse_table
from .schemas import (CommandResponse, ErrorResponse, HealthResponse,
                      InvertRequest, ScenarioRequest)


def _load(config_text: str, seed) -> ScenarioConfig:
    config = parse_scenario(config_text)
    if seed is not None:
        config = config.with_overrides(seed=int(seed))
    return config


def _respond(output: CommandOutput, extra_warnings) -> CommandResponse:
    notes = list(output.warnings)
    for w in extra_warnings:
        msg = str(w.message)
        if msg not in notes:
            notes.append(msg)
    return CommandResponse(files=output.files, summary=output.summary,
                           warnings=notes, flags=output.flags)


def create_app() -> FastAPI:
    app = FastAPI(
        title="condensate current-noise spectroscopy service",
        version=__version__,
    )

    @app.exception_handler(ValidationError)
    async def _validation(request: Request, exc: ValidationError):
        return JSONResponse(
            status_code=400,
            content=ErrorResponse(error_type="validation",
                                  detail=str(exc)).model_dump(),
        )

    @app.exception_handler(NumericalError)
    async def _numerical(request: Request, exc: NumericalError):
        return JSONResponse(
            status_code=422,
            content=ErrorResponse(error_type="numerical",
                                  detail=str(exc)).model_dump(),
        )

    @app.exception_handler(StatisticalError)
    async def _statistical(request: Request, exc: StatisticalError):
        return JSONResponse(
            status_code=409,
            content=ErrorResponse(error_type="statistical",
                                  detail=str(exc)).model_dump(),
        )

    @app.get("/v1/health", response_model=HealthResponse)
    async def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    def _run(fn, request: ScenarioRequest, **kwargs) -> CommandResponse:
        config = _load(request.config, request.seed)
        with _warnings.catch_warnings(record=True) as caught:
            _warnings.simplefilter("always")
            output = fn(config, fmt=request.fmt, **kwargs)
        return _respond(output, caught)

    @app.post("/v1/kernel", response_model=CommandResponse)
    async def kernel(request: ScenarioRequest) -> CommandResponse:
        return _run(run_kernel, request, threads=request.threads)

    @app.post("/v1/scan", response_model=CommandResponse)
    async def scan(request: ScenarioRequest) -> CommandResponse:
        return _run(run_scan, request, threads=request.threads)

    @app.post("/v1/oracle", response_model=CommandResponse)
    async def oracle(request: ScenarioRequest) -> CommandResponse:
        return _run(run_oracle, request)

    @app.post("/v1/estimate", response_model=CommandResponse)
    async def estimate(request: ScenarioRequest) -> CommandResponse:
        return _run(run_estimate, request)

    @app.post("/v1/invert", response_model=CommandResponse)
    async def invert(request: InvertRequest) -> CommandResponse:
        config_text = request.config
        if config_text is None:
            config_text = parse_table(request.scan_file).config_text
            if not config_text.strip():
                raise ValidationError(
                    "no inversion configuration: pass one explicitly or use a "
                    "scan file with an embedded scenario block"
                )
        config = _load(config_text, request.seed)
        with _warnings.catch_warnings(record=True) as caught:
            _warnings.simplefilter("always")
            output = run_invert(request.scan_file, request.kernel_file,
                                config, fmt=request.fmt)
        return _respond(output, caught)

    return app
