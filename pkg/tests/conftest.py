"""Shared fixtures: small on-disk datasets and their schemas."""

import json

import numpy as np
import pytest


@pytest.fixture(scope="session")
def regression_csv(tmp_path_factory):
    """A 400-row linear dataset with light noise, written as CSV + schema.

    Ground truth is y = 10*a - 10*b + N(0, 0.1), features N(0, 0.5^2).
    """
    root = tmp_path_factory.mktemp("regdata")
    rng = np.random.default_rng(5)
    n = 400
    X = rng.normal(size=(n, 2)) * 0.5
    y = X @ np.array([10.0, -10.0]) + rng.normal(size=n) * 0.1
    lines = ["a,b,y"]
    for i in range(n):
        lines.append(f"{float(X[i, 0])!r},{float(X[i, 1])!r},{float(y[i])!r}")
    csv_path = root / "reg.csv"
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    schema_path = root / "reg.schema.json"
    schema_path.write_text(
        json.dumps(
            {
                "columns": [
                    {"name": "a", "kind": "numeric"},
                    {"name": "b", "kind": "numeric"},
                    {"name": "y", "kind": "numeric"},
                ],
                "label": "y",
                "task": "regression",
            }
        ),
        encoding="utf-8",
    )
    return {"csv": csv_path, "schema": schema_path, "X": X, "y": y}


@pytest.fixture(scope="session")
def classification_csv(tmp_path_factory):
    """A 120-row two-class dataset with one numeric and one categorical feature."""
    root = tmp_path_factory.mktemp("clsdata")
    rng = np.random.default_rng(11)
    n = 120
    x = rng.normal(size=n)
    color = rng.choice(["red", "blue"], size=n)
    logits = 2.0 * x + np.where(color == "red", 1.0, -1.0)
    labels = np.where(logits + rng.normal(size=n) > 0, "yes", "no")
    lines = ["x,color,outcome"]
    for i in range(n):
        lines.append(f"{float(x[i])!r},{color[i]},{labels[i]}")
    csv_path = root / "cls.csv"
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    schema_path = root / "cls.schema.json"
    schema_path.write_text(
        json.dumps(
            {
                "columns": [
                    {"name": "x", "kind": "numeric"},
                    {"name": "color", "kind": "categorical", "categories": ["red", "blue"]},
                    {
                        "name": "outcome",
                        "kind": "categorical",
                        "categories": ["no", "yes"],
                    },
                ],
                "label": "outcome",
                "task": "classification",
                "positive_label": "yes",
            }
        ),
        encoding="utf-8",
    )
    return {"csv": csv_path, "schema": schema_path}


@pytest.fixture()
def bench_config_dict(regression_csv):
    """A one-dataset benchmark grid small enough for test runtimes."""
    return {
        "datasets": [
            {
                "name": "reg",
                "csv_path": str(regression_csv["csv"]),
                "schema_path": str(regression_csv["schema"]),
            }
        ],
        "algorithms": ["adassp", "boosted_adassp"],
        "epsilons": [1.0],
        "taus": [1.0],
        "rounds_grid": [5],
        "seeds": [0, 1, 2],
    }
