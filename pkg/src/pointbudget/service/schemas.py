"""Request/response models for the analysis service."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class AnalysisOverrides(BaseModel):
    seed: Optional[int] = None
    samples: Optional[int] = None
    method: Optional[str] = Field(default=None, pattern="^(advanced|simplified)$")
    worst_case: Optional[bool] = None
    dump_model: bool = False


class AnalysisRequest(BaseModel):
    scenario: str = Field(description="scenario file content (YAML text)")
    overrides: AnalysisOverrides = Field(default_factory=AnalysisOverrides)


class AxisBudgetModel(BaseModel):
    axis: str
    mean: float
    std: float
    total: float
    margin: Optional[float] = None
    subtotals: dict[str, float]


class BudgetModel(BaseModel):
    method: str
    confidence: float
    n_p: Optional[float] = None
    n_samples: Optional[int] = None
    seed: Optional[int] = None
    rng_algorithm: Optional[str] = None
    axes: list[AxisBudgetModel]
    contributions: list[dict]
    flags: list[str] = []


class WorstCaseModel(BaseModel):
    criterion: str
    lower_bound: float
    upper_bound: float
    upper_bound_certified: bool
    stagnation_gap: float
    nominal_value: float
    evaluations: int
    converged: bool
    config: dict[str, float]
    peak_frequency_hz: Optional[dict[str, float]] = None
    budget: BudgetModel


class AnalysisResponse(BaseModel):
    metadata: dict
    scenario: dict
    budget: BudgetModel
    flags: list[str]
    worst_case: dict[str, WorstCaseModel]
    envelope: Optional[BudgetModel] = None
    diagnostics: Optional[dict] = None
    plot_data: dict


class ValidationIssue(BaseModel):
    field: str
    message: str


class ValidationRequest(BaseModel):
    scenario: str


class ValidationResponse(BaseModel):
    valid: bool
    errors: list[ValidationIssue] = []
    normalized: Optional[dict] = None


class HealthResponse(BaseModel):
    status: str
    version: str
