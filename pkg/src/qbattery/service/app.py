"""FastAPI service wrapping the simulation package.

Endpoints mirror the CLI surface: one-off runs, one-axis sweeps and the
figure-reproduction sweeps.  Row endpoints return JSON by default and the
canonical CSV (12 significant digits, LF) with `?format=csv`.

Error contract: invalid payloads give 422 (FastAPI validation) or 400 with
error_code 1; numerical integration failures give 500 with error_code 2.
"""

from __future__ import annotations

from fastapi import FastAPI, Query
from fastapi.responses import JSONResponse, PlainTextResponse

from .. import __version__
from ..config import Fig2Config, Fig34Config, RunConfig, SweepConfig, default_config_json
from ..csvio import render_csv
from ..errors import IntegrationError, UsageError
from ..sweeps import execute_run, fig2_rows, fig3_rows, fig4_rows, sweep_rows
from .schemas import ErrorResponse, HealthResponse, ReportModel, RowsResponse, RunResponse

app = FastAPI(
    title="qbattery",
    version=__version__,
    description="Vacuum-enhanced quantum-battery charging simulations",
)


@app.exception_handler(UsageError)
async def _usage_error(request, exc):
    return JSONResponse(status_code=400, content=ErrorResponse(error_code=1, detail=str(exc)).model_dump())


@app.exception_handler(ValueError)
async def _value_error(request, exc):
    return JSONResponse(status_code=400, content=ErrorResponse(error_code=1, detail=str(exc)).model_dump())


@app.exception_handler(IntegrationError)
async def _integration_error(request, exc):
    return JSONResponse(status_code=500, content=ErrorResponse(error_code=2, detail=str(exc)).model_dump())


def _rows_response(columns, rows, fmt):
    if fmt == "csv":
        return PlainTextResponse(render_csv(columns, rows), media_type="text/csv")
    return RowsResponse(columns=columns, rows=rows)


@app.get("/health", response_model=HealthResponse)
def health():
    return HealthResponse(version=__version__)


@app.get("/config/defaults")
def config_defaults(command: str = Query("run")):
    return default_config_json(command)


@app.post("/run", response_model=RunResponse)
def run_endpoint(cfg: RunConfig):
    report = execute_run(cfg)
    return RunResponse(
        report=ReportModel.from_report(report),
        invariant_violations=report.validate(),
        pretty=report.pretty(),
    )


@app.post("/sweep")
def sweep_endpoint(cfg: SweepConfig, format: str = Query("json"), jobs: int | None = Query(None, ge=1)):
    columns, rows = sweep_rows(cfg, jobs=jobs)
    return _rows_response(columns, rows, format)


@app.post("/figures/fig2")
def fig2_endpoint(cfg: Fig2Config, format: str = Query("json"), jobs: int | None = Query(None, ge=1)):
    columns, rows = fig2_rows(cfg, jobs=jobs)
    return _rows_response(columns, rows, format)


@app.post("/figures/fig3")
def fig3_endpoint(cfg: Fig34Config, format: str = Query("json"), jobs: int | None = Query(None, ge=1)):
    columns, rows = fig3_rows(cfg, jobs=jobs)
    return _rows_response(columns, rows, format)


@app.post("/figures/fig4")
def fig4_endpoint(cfg: Fig34Config, format: str = Query("json"), jobs: int | None = Query(None, ge=1)):
    columns, rows = fig4_rows(cfg, jobs=jobs)
    return _rows_response(columns, rows, format)
