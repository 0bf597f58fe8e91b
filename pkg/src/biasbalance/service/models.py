"""Pydantic request/response schemas for the HTTP service.

File contents travel inline as strings, so a request is self-contained and the
service stays stateless.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field

PropertyFamily = Literal["names", "distance"]


class WeightFilePayload(BaseModel):
    label: str
    weights_tsv: str


class WeighRequest(BaseModel):
    dataset_tsv: str
    annotations_jsonl: str
    properties: list[PropertyFamily] = Field(default=["names", "distance"])
    trim: bool = False
    max_names: int = 15
    max_rank: int = 4
    naive: bool = False
    solver_backend: Literal["auto", "self", "scipy"] = "auto"


class WeighMetadata(BaseModel):
    objective: float
    status: str
    property_labels: list[str]
    n: float
    lambda_a: float
    lambda_b: float
    zero_weights: int
    one_sided_properties: list[str]
    solver: dict[str, float]
    trimmed: bool
    retained_examples: int


class WeighResponse(BaseModel):
    weights_tsv: str
    metadata: WeighMetadata


class EvaluateRequest(BaseModel):
    dataset_tsv: str
    predictions_tsv: str
    weight_files: list[WeightFilePayload] = Field(default_factory=list)
    name: str = "model"


class EvaluateResponse(BaseModel):
    table_text: str
    table: dict
    missing_predictions: list[str]


class TrimRequest(BaseModel):
    dataset_tsv: str
    annotations_jsonl: str
    max_names: int = 15
    max_rank: int = 4


class TrimResponse(BaseModel):
    dataset_tsv: str
    annotations_jsonl: str
    retained: int
    masculine: int
    feminine: int


class GroupStats(BaseModel):
    mean: float | None
    std: float | None
    total: int


class AnalyzeRequest(BaseModel):
    dataset_tsv: str
    annotations_jsonl: str
    weights_tsv: str | None = None
    weight_label: str = "W"


class WeightOutlier(BaseModel):
    id: str
    group: str
    weight: float


class AnalyzeResponse(BaseModel):
    name_count_stats: dict[str, GroupStats]
    rank_stats: dict[str, GroupStats]
    name_count_csv: str
    rank_csv: str
    weight_histogram_csv: str | None = None
    weight_histogram: dict | None = None
    weight_outliers: list[WeightOutlier] = Field(default_factory=list)
    max_weight: float | None = None
    zero_weights: int | None = None


class BaselineRequest(BaseModel):
    dataset_tsv: str
    annotations_jsonl: str
    kind: Literal["random", "dist-k"] = "random"
    k: int = 1
    repetitions: int = 10_000
    seed: int = 0


class BaselineSummary(BaseModel):
    exact_accuracy: dict[str, float] | None = None
    empirical_accuracy: dict[str, float] | None = None
    empirical_f1: dict[str, float] | None = None
    overall_exact_accuracy: float | None = None
    overall_empirical_accuracy: float | None = None
    overall_empirical_f1: float | None = None


class BaselineResponse(BaseModel):
    predictions_tsv: str
    summary: BaselineSummary


class SignificanceRequest(BaseModel):
    dataset_tsv: str
    predictions_1_tsv: str
    predictions_2_tsv: str
    weights_tsv: str | None = None
    metric: Literal["acc-bias", "weighted-bias"] = "acc-bias"
    iterations: int = 10_000
    seed: int = 0


class SignificanceResponse(BaseModel):
    observed: float
    p_value: float
    iterations: int
    seed: int
    metric: str
    undefined_iterations: int


class VerifyRequest(BaseModel):
    seed: int = 0
    rounds: int = 40


class VerifyCheck(BaseModel):
    name: str
    passed: bool
    detail: str


class VerifyResponse(BaseModel):
    passed: bool
    checks: list[VerifyCheck]


class ErrorBody(BaseModel):
    kind: str
    message: str


class ErrorResponse(BaseModel):
    error: ErrorBody
