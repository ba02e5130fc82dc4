"""Benchmark grid runner.

A config spells out datasets and grids over (algorithm, epsilon, tau,
rounds, seed); the runner executes every cell, fail-soft by default (a
failed cell becomes an error record, never a crashed grid), and returns
results sorted by key so output is deterministic no matter how the worker
pool schedules the cells.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .accounting import BudgetSplit, PrivacyBudget
from .boosting import BoostConfig, boosted_adassp_fit
from .data import Schema, load_csv, one_hot_encode, preprocess, schema_from_json, train_test_split
from .mechanisms import NoiseDraw
from .metrics import auprc, auroc, f1_at_zero, mse
from .regression import EncodedDataset, adassp_fit

__all__ = [
    "DatasetSpec",
    "ExperimentConfig",
    "RunResult",
    "config_from_json",
    "grid_size",
    "run_experiment",
    "ALGORITHMS",
]

ALGORITHMS = ("adassp", "boosted_adassp")


@dataclass(frozen=True)
class DatasetSpec:
    """One dataset: a display name plus paths to its CSV and schema files."""

    name: str
    csv_path: str
    schema_path: str

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("dataset name must be nonempty")


@dataclass(frozen=True)
class ExperimentConfig:
    """Full grid description; every list must be nonempty.

    The grid is the cartesian product datasets x algorithms x epsilons x
    taus x rounds_grid x seeds. The single-shot algorithm has no use for
    rounds but still runs once per rounds value so the grid stays complete
    and the pairing with the boosted runs is exact.
    """

    datasets: tuple[DatasetSpec, ...]
    algorithms: tuple[str, ...]
    epsilons: tuple[float, ...]
    taus: tuple[float, ...]
    rounds_grid: tuple[int, ...]
    seeds: tuple[int, ...]
    delta: float = 1e-6
    split_ratio: tuple[float, float, float] = (1.0, 1.0, 1.0)
    x_clip: float = 1.0
    test_fraction: float = 0.2
    add_intercept: bool = False
    strict_lambda_mode: bool = False
    record_timing: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "datasets", tuple(self.datasets))
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        object.__setattr__(self, "epsilons", tuple(float(e) for e in self.epsilons))
        object.__setattr__(self, "taus", tuple(float(t) for t in self.taus))
        object.__setattr__(self, "rounds_grid", tuple(int(r) for r in self.rounds_grid))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "split_ratio", tuple(float(w) for w in self.split_ratio))
        for name in ("datasets", "algorithms", "epsilons", "taus", "rounds_grid", "seeds"):
            if len(getattr(self, name)) == 0:
                raise ValueError(f"{name} must be nonempty")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ValueError(f"unknown algorithm {a!r}, expected subset of {ALGORITHMS}")
        names = [d.name for d in self.datasets]
        if len(set(names)) != len(names):
            raise ValueError("dataset names must be unique")
        if any(e <= 0 or math.isinf(e) or math.isnan(e) for e in self.epsilons):
            raise ValueError("epsilons must be positive finite reals")
        if any(t <= 0 or math.isinf(t) or math.isnan(t) for t in self.taus):
            raise ValueError("taus must be positive finite reals")
        if any(r < 1 for r in self.rounds_grid):
            raise ValueError("rounds_grid entries must be >= 1")
        delta = float(self.delta)
        if math.isnan(delta) or not 0.0 < delta < 1.0:
            raise ValueError(f"delta must lie strictly between 0 and 1, got {self.delta}")
        object.__setattr__(self, "delta", delta)
        if len(self.split_ratio) != 3 or any(w < 0 for w in self.split_ratio):
            raise ValueError("split_ratio must be three nonnegative weights")
        x_clip = float(self.x_clip)
        if math.isnan(x_clip) or math.isinf(x_clip) or x_clip <= 0.0:
            raise ValueError(f"x_clip must be a positive finite real, got {self.x_clip}")
        object.__setattr__(self, "x_clip", x_clip)
        tf = float(self.test_fraction)
        if math.isnan(tf) or not 0.0 < tf < 1.0:
            raise ValueError(f"test_fraction must lie strictly between 0 and 1, got {tf}")
        object.__setattr__(self, "test_fraction", tf)

    def to_dict(self) -> dict:
        return {
            "datasets": [
                {"name": d.name, "csv_path": d.csv_path, "schema_path": d.schema_path}
                for d in self.datasets
            ],
            "algorithms": list(self.algorithms),
            "epsilons": list(self.epsilons),
            "taus": list(self.taus),
            "rounds_grid": list(self.rounds_grid),
            "seeds": list(self.seeds),
            "delta": self.delta,
            "split_ratio": list(self.split_ratio),
            "x_clip": self.x_clip,
            "test_fraction": self.test_fraction,
            "add_intercept": self.add_intercept,
            "strict_lambda_mode": self.strict_lambda_mode,
            "record_timing": self.record_timing,
        }


def config_from_json(source) -> ExperimentConfig:
    """Build an ExperimentConfig from a JSON file path or a parsed dict.

    Keys mirror the ExperimentConfig field names exactly; unknown keys are
    rejected so config typos fail loudly.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    else:
        doc = dict(source)
    if not isinstance(doc, dict):
        raise ValueError("experiment config must be a JSON object")
    known = {
        "datasets", "algorithms", "epsilons", "taus", "rounds_grid", "seeds",
        "delta", "split_ratio", "x_clip", "test_fraction", "add_intercept",
        "strict_lambda_mode", "record_timing",
    }
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    datasets = tuple(
        DatasetSpec(
            name=d.get("name", Path(d["csv_path"]).stem),
            csv_path=d["csv_path"],
            schema_path=d["schema_path"],
        )
        for d in doc.get("datasets", ())
    )
    kwargs = {k: v for k, v in doc.items() if k != "datasets"}
    return ExperimentConfig(datasets=datasets, **kwargs)


@dataclass(frozen=True)
class RunResult:
    """Outcome of one grid cell: metrics on success, an error string on failure."""

    dataset: str
    algorithm: str
    epsilon: float
    delta: float
    tau: float
    rounds: int
    seed: int
    metrics: dict = field(default_factory=dict)
    wall_ms: float = 0.0
    error: str | None = None

    @property
    def key(self) -> tuple:
        return (self.dataset, self.algorithm, self.epsilon, self.tau, self.rounds, self.seed)

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "algorithm": self.algorithm,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "tau": self.tau,
            "rounds": self.rounds,
            "seed": self.seed,
            "metrics": dict(sorted(self.metrics.items())),
            "wall_ms": self.wall_ms,
            "error": self.error,
        }


def grid_size(config: ExperimentConfig) -> int:
    return (
        len(config.datasets)
        * len(config.algorithms)
        * len(config.epsilons)
        * len(config.taus)
        * len(config.rounds_grid)
        * len(config.seeds)
    )


def _load_dataset(spec: DatasetSpec) -> tuple[EncodedDataset, Schema]:
    schema = schema_from_json(spec.schema_path)
    table = load_csv(spec.csv_path, schema)
    return one_hot_encode(table, schema), schema


def _evaluate(model, test: EncodedDataset, task: str, config: ExperimentConfig) -> dict:
    # The model saw clipped (and possibly intercept-extended) features, so
    # the test rows get the same transform; labels are evaluated raw.
    test_pre = preprocess(test, config.x_clip, tau_label=None, add_intercept=config.add_intercept)
    preds = model.predict(test_pre.X)
    if task == "regression":
        metrics = {"mse": mse(test.y, preds)}
    else:
        metrics = {
            "f1": f1_at_zero(test.y, preds),
            "auroc": auroc(test.y, preds),
            "auprc": auprc(test.y, preds),
        }
    bad = {k: v for k, v in metrics.items() if math.isnan(v) or math.isinf(v)}
    if bad:
        raise ValueError(f"non-finite metrics {bad}; recording the run as failed")
    return metrics


def _run_cell(
    config: ExperimentConfig,
    spec: DatasetSpec,
    encoded: EncodedDataset,
    schema: Schema,
    algorithm: str,
    epsilon: float,
    tau: float,
    rounds: int,
    seed: int,
) -> RunResult:
    start = time.perf_counter()
    budget = PrivacyBudget.from_epsilon_delta(epsilon, config.delta)
    split = BudgetSplit.from_ratio(budget.mu_total, *config.split_ratio)
    train, test = train_test_split(
        encoded, config.test_fraction, seed, stream_label=f"split/{spec.name}"
    )
    noise = NoiseDraw(
        seed=seed,
        stream_label=f"bench/{spec.name}/{algorithm}/eps={epsilon!r}/tau={tau!r}/T={rounds}",
    )
    if algorithm == "adassp":
        pre = preprocess(
            train, config.x_clip, tau_label=tau, add_intercept=config.add_intercept
        )
        model = adassp_fit(
            pre, budget, split, noise.child("fit"),
            strict_lambda_mode=config.strict_lambda_mode,
        )
    else:
        pre = preprocess(
            train, config.x_clip, tau_label=None, add_intercept=config.add_intercept
        )
        boost = BoostConfig(
            rounds=rounds,
            tau=tau,
            split=split,
            x_clip=config.x_clip,
            strict_lambda_mode=config.strict_lambda_mode,
        )
        model = boosted_adassp_fit(pre, budget, boost, noise.child("fit"))
    metrics = _evaluate(model, test, schema.task, config)
    wall_ms = (time.perf_counter() - start) * 1000.0
    return RunResult(
        dataset=spec.name,
        algorithm=algorithm,
        epsilon=epsilon,
        delta=config.delta,
        tau=tau,
        rounds=rounds,
        seed=seed,
        metrics=metrics,
        wall_ms=wall_ms,
    )


def run_experiment(
    config: ExperimentConfig, *, fail_fast: bool = False, threads: int = 1
) -> list[RunResult]:
    """Execute the full grid and return results sorted by key.

    Per-cell exceptions become RunResult error records unless fail_fast is
    set. Dataset files that fail to load are config errors and always
    raise. threads > 1 fans cells out over a thread pool; each cell is a
    pure task, so scheduling cannot change the returned values.
    """
    if not isinstance(threads, int) or isinstance(threads, bool) or threads < 1:
        raise ValueError(f"threads must be a positive integer, got {threads!r}")
    loaded = {spec.name: _load_dataset(spec) for spec in config.datasets}

    cells = [
        (spec, algorithm, epsilon, tau, rounds, seed)
        for spec in config.datasets
        for algorithm in config.algorithms
        for epsilon in config.epsilons
        for tau in config.taus
        for rounds in config.rounds_grid
        for seed in config.seeds
    ]

    def execute(cell) -> RunResult:
        spec, algorithm, epsilon, tau, rounds, seed = cell
        encoded, schema = loaded[spec.name]
        try:
            return _run_cell(
                config, spec, encoded, schema, algorithm, epsilon, tau, rounds, seed
            )
        except Exception as exc:
            if fail_fast:
                raise
            return RunResult(
                dataset=spec.name,
                algorithm=algorithm,
                epsilon=epsilon,
                delta=config.delta,
                tau=tau,
                rounds=rounds,
                seed=seed,
                metrics={},
                wall_ms=0.0,
                error=f"{type(exc).__name__}: {exc}",
            )

    if threads == 1:
        results = [execute(cell) for cell in cells]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(execute, cells))
    results.sort(key=lambda r: r.key)
    return results
