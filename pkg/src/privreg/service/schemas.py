"""Pydantic request/response models for the service endpoints.

The experiment config model mirrors ExperimentConfig field names exactly,
so a JSON config file is valid as the "config" payload of a bench request
without translation.
"""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field

_STRICT = ConfigDict(extra="forbid")


class DatasetSpecModel(BaseModel):
    model_config = _STRICT

    name: str | None = None
    csv_path: str
    schema_path: str


class ExperimentConfigModel(BaseModel):
    model_config = _STRICT

    datasets: list[DatasetSpecModel]
    algorithms: list[str]
    epsilons: list[float]
    taus: list[float]
    rounds_grid: list[int]
    seeds: list[int]
    delta: float = 1e-6
    split_ratio: tuple[float, float, float] = (1.0, 1.0, 1.0)
    x_clip: float = 1.0
    test_fraction: float = 0.2
    add_intercept: bool = False
    strict_lambda_mode: bool = False
    record_timing: bool = False


class FitRequest(BaseModel):
    model_config = _STRICT

    csv_path: str
    schema_path: str
    algorithm: str = "boosted_adassp"
    epsilon: float = 1.0
    delta: float = 1e-6
    tau: float = 1.0
    rounds: int = 1
    seed: int = 0
    split_ratio: tuple[float, float, float] = (1.0, 1.0, 1.0)
    x_clip: float = 1.0
    # None fits on the full table and skips metrics; a fraction holds out a
    # seeded test split and reports metrics on it.
    test_fraction: float | None = None
    add_intercept: bool = False
    strict_lambda_mode: bool = False


class ReleaseModel(BaseModel):
    label: str
    mu: float
    sensitivity: float


class FitResponse(BaseModel):
    algorithm: str
    theta: list[float]
    lambda_used: float
    lambda_hat: float
    mu_total: float
    epsilon: float
    delta: float
    seed: int
    releases: list[ReleaseModel]
    metrics: dict[str, float] | None = None


class BenchRequest(BaseModel):
    model_config = _STRICT

    config: ExperimentConfigModel
    # Directory for report files, resolved on the serving side; omit to get
    # results in the response only.
    out_dir: str | None = None
    fail_fast: bool = False
    threads: int = 1


class RunResultModel(BaseModel):
    dataset: str
    algorithm: str
    epsilon: float
    delta: float
    tau: float
    rounds: int
    seed: int
    metrics: dict[str, float]
    wall_ms: float
    error: str | None = None


class BenchResponse(BaseModel):
    results: list[RunResultModel]
    grid_size: int
    failure_count: int
    report_dir: str | None = None
    report_files: list[str] = Field(default_factory=list)


class TheoryRequest(BaseModel):
    model_config = _STRICT

    mc_trials: int = 2000
    seed: int = 0
    claims: list[str] | None = None
    huber_grid_samples: int = 20


class TheoryRowModel(BaseModel):
    claim: str
    point: str
    bound: float
    observed: float
    passed: bool


class TheoryResponse(BaseModel):
    rows: list[TheoryRowModel]
    all_passed: bool
    csv_text: str


class RatioCdfRequest(BaseModel):
    model_config = _STRICT

    # Either inline results or a path to a results.jsonl written by bench.
    results: list[RunResultModel] | None = None
    results_path: str | None = None
    candidate: str = "boosted_adassp"
    baseline: str = "adassp"
    metric: str = "mse"
    optimize_over: list[str] = Field(default_factory=list)


class CurvePointModel(BaseModel):
    ratio: float
    cumulative_count: int


class RatioCdfResponse(BaseModel):
    candidate: str
    baseline: str
    metric: str
    points: list[CurvePointModel]
    csv_text: str


class MuForEpsilonDeltaRequest(BaseModel):
    model_config = _STRICT

    epsilon: float
    delta: float


class DeltaForMuRequest(BaseModel):
    model_config = _STRICT

    mu: float
    epsilon: float


class ConversionResponse(BaseModel):
    epsilon: float
    delta: float
    mu: float


class VersionResponse(BaseModel):
    name: str
    version: str
