"""HTTP service wrapping the analysis pipeline.

Stateless: each request carries the full scenario text; the response is
the complete report document (including plot data), so clients can
render files locally.  Error responses carry a ``kind`` field so thin
clients can map them onto exit codes: ``scenario`` (bad input),
``model`` (instability / structural problems), ``numerical``.
"""

from __future__ import annotations

import yaml
from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import ModelError, NumericalError, PointingBudgetError, ScenarioError
from ..pipeline import run
from ..report import to_dict
from ..scenario import parse_scenario
from .schemas import (
    AnalysisRequest,
    AnalysisResponse,
    HealthResponse,
    ValidationIssue,
    ValidationRequest,
    ValidationResponse,
)

app = FastAPI(
    title="pointbudget",
    description="Pointing-error budgeting for flexible spacecraft",
    version=__version__,
)


def _error_response(kind: str, message: str, field: str | None = None) -> JSONResponse:
    detail = {"kind": kind, "message": message}
    if field is not None:
        detail["field"] = field
    return JSONResponse(status_code=422, content={"detail": detail})


def _parse_text(scenario_text: str):
    try:
        raw = yaml.safe_load(scenario_text)
    except yaml.YAMLError as exc:
        raise ScenarioError("scenario", f"malformed YAML: {exc}") from None
    if not isinstance(raw, dict):
        raise ScenarioError("scenario", "top level must be a mapping")
    return parse_scenario(raw)


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.post("/validate", response_model=ValidationResponse)
def validate(request: ValidationRequest) -> ValidationResponse:
    try:
        config = _parse_text(request.scenario)
    except ScenarioError as exc:
        return ValidationResponse(
            valid=False,
            errors=[ValidationIssue(field=exc.field, message=str(exc))],
        )
    return ValidationResponse(valid=True, normalized=config.normalized)


@app.post("/analyses", response_model=AnalysisResponse)
def analyze(request: AnalysisRequest):
    try:
        config = _parse_text(request.scenario)
        report = run(
            config,
            seed=request.overrides.seed,
            samples=request.overrides.samples,
            method=request.overrides.method,
            worst_case=request.overrides.worst_case,
            dump_model=request.overrides.dump_model,
        )
    except ScenarioError as exc:
        return _error_response("scenario", str(exc), exc.field)
    except NumericalError as exc:
        return _error_response("numerical", str(exc))
    except ModelError as exc:
        return _error_response("model", str(exc))
    except PointingBudgetError as exc:  # pragma: no cover - catch-all
        return _error_response("model", str(exc))
    return JSONResponse(content=to_dict(report, include_plot_data=True))
