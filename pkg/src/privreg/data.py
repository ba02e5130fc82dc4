"""Dataset ingestion: CSV loading against a public schema, one-hot encoding,
seeded train/test splitting, and clipping-based preprocessing.

The schema is public information: column kinds, category lists, the label
column, and the task. Everything data-dependent (values, empirical bounds)
stays inside the returned objects. Missing values are hard errors; nothing
here imputes, centers, or rescales beyond clipping.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .mechanisms import NoiseDraw, clip_rows_l2, clip_values
from .regression import EncodedDataset

__all__ = [
    "ColumnSpec",
    "Schema",
    "Column",
    "RawTable",
    "schema_from_json",
    "load_csv",
    "one_hot_encode",
    "decode_one_hot",
    "train_test_split",
    "preprocess",
]

_KINDS = ("numeric", "categorical")
_TASKS = ("regression", "classification")


@dataclass(frozen=True)
class ColumnSpec:
    """One schema column: a name, a kind, and the category list when categorical."""

    name: str
    kind: str
    categories: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("column name must be nonempty")
        if self.kind not in _KINDS:
            raise ValueError(f"column {self.name!r} has unknown kind {self.kind!r}")
        cats = tuple(self.categories)
        if self.kind == "categorical":
            if len(cats) == 0:
                raise ValueError(f"categorical column {self.name!r} needs a category list")
            if len(set(cats)) != len(cats):
                raise ValueError(f"categorical column {self.name!r} has duplicate categories")
        elif cats:
            raise ValueError(f"numeric column {self.name!r} must not list categories")
        object.__setattr__(self, "categories", cats)


@dataclass(frozen=True)
class Schema:
    """Public dataset description: columns in file order, label column, task."""

    columns: tuple[ColumnSpec, ...]
    label: str
    task: str
    positive_label: str | None = None

    def __post_init__(self) -> None:
        columns = tuple(self.columns)
        if len(columns) == 0:
            raise ValueError("schema needs at least one column")
        names = [c.name for c in columns]
        if len(set(names)) != len(names):
            raise ValueError("schema column names must be unique")
        if self.label not in names:
            raise ValueError(f"label column {self.label!r} not found in schema")
        if self.task not in _TASKS:
            raise ValueError(f"task must be one of {_TASKS}, got {self.task!r}")
        label_col = columns[names.index(self.label)]
        if self.task == "classification":
            if label_col.kind != "categorical" or len(label_col.categories) != 2:
                raise ValueError(
                    "classification requires a categorical label with exactly 2 categories"
                )
            positive = self.positive_label
            if positive is None:
                positive = label_col.categories[-1]
            if positive not in label_col.categories:
                raise ValueError(
                    f"positive_label {positive!r} is not one of {label_col.categories}"
                )
            object.__setattr__(self, "positive_label", positive)
        else:
            if label_col.kind != "numeric":
                raise ValueError("regression requires a numeric label column")
            if self.positive_label is not None:
                raise ValueError("positive_label only applies to classification")
        object.__setattr__(self, "columns", columns)

    @property
    def feature_columns(self) -> tuple[ColumnSpec, ...]:
        return tuple(c for c in self.columns if c.name != self.label)

    @property
    def label_column(self) -> ColumnSpec:
        return next(c for c in self.columns if c.name == self.label)


def schema_from_json(source) -> Schema:
    """Build a Schema from a JSON file path or an already-parsed dict."""
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    else:
        doc = source
    if not isinstance(doc, dict):
        raise ValueError("schema document must be a JSON object")
    columns = tuple(
        ColumnSpec(
            name=c["name"],
            kind=c["kind"],
            categories=tuple(c.get("categories", ())),
        )
        for c in doc.get("columns", ())
    )
    return Schema(
        columns=columns,
        label=doc.get("label", ""),
        task=doc.get("task", ""),
        positive_label=doc.get("positive_label"),
    )


@dataclass(frozen=True)
class Column:
    """One loaded column: numeric values as floats, categorical as strings."""

    name: str
    kind: str
    values: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(self.values))


@dataclass(frozen=True)
class RawTable:
    """Typed columnar table; immutable after load."""

    columns: tuple[Column, ...]
    row_count: int

    def __post_init__(self) -> None:
        columns = tuple(self.columns)
        for c in columns:
            if len(c.values) != self.row_count:
                raise ValueError(
                    f"column {c.name!r} has {len(c.values)} values, expected {self.row_count}"
                )
        object.__setattr__(self, "columns", columns)

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(f"no column named {name!r}")


def load_csv(path, schema: Schema) -> RawTable:
    """Load a UTF-8 comma-separated file whose header matches the schema.

    Numeric parse failures, unknown categories, missing values, and ragged
    rows are hard errors that name the offending row and column. Data rows
    are counted from 1 (the header is row 0).
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    expected_header = [c.name for c in schema.columns]
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected a header row") from None
        if header != expected_header:
            raise ValueError(f"{path}: header {header} does not match schema {expected_header}")
        raw_rows = [row for row in reader]
    if len(raw_rows) == 0:
        raise ValueError(f"{path}: no rows")

    by_spec: dict[str, list] = {c.name: [] for c in schema.columns}
    for r, row in enumerate(raw_rows, start=1):
        if len(row) != len(expected_header):
            raise ValueError(
                f"{path}: row {r} has {len(row)} fields, expected {len(expected_header)}"
            )
        for spec, text in zip(schema.columns, row):
            if text == "":
                raise ValueError(f"{path}: row {r}, column {spec.name!r}: missing value")
            if spec.kind == "numeric":
                try:
                    value = float(text)
                except ValueError:
                    raise ValueError(
                        f"{path}: row {r}, column {spec.name!r}: "
                        f"cannot parse {text!r} as numeric"
                    ) from None
                if math.isnan(value) or math.isinf(value):
                    raise ValueError(
                        f"{path}: row {r}, column {spec.name!r}: non-finite value {text!r}"
                    )
                by_spec[spec.name].append(value)
            else:
                if text not in spec.categories:
                    raise ValueError(
                        f"{path}: row {r}, column {spec.name!r}: "
                        f"unknown category {text!r}, expected one of {list(spec.categories)}"
                    )
                by_spec[spec.name].append(text)

    columns = tuple(
        Column(name=c.name, kind=c.kind, values=tuple(by_spec[c.name])) for c in schema.columns
    )
    return RawTable(columns=columns, row_count=len(raw_rows))


def one_hot_encode(table: RawTable, schema: Schema) -> EncodedDataset:
    """Expand categorical feature columns to indicators and extract the label.

    Each categorical column of cardinality c becomes c 0/1 columns in the
    schema's category order; numeric columns pass through unchanged.
    Classification labels map to -1/+1 by the schema's positive_label.
    Bounds are empirical: x_bound is the largest row norm, y_bound the
    largest label magnitude (each floored at 1 if the data is all zero so
    the bounds stay positive).
    """
    blocks: list[np.ndarray] = []
    for spec in schema.feature_columns:
        col = table.column(spec.name)
        if spec.kind == "numeric":
            blocks.append(np.asarray(col.values, dtype=float).reshape(-1, 1))
        else:
            block = np.zeros((table.row_count, len(spec.categories)))
            index = {cat: j for j, cat in enumerate(spec.categories)}
            for i, v in enumerate(col.values):
                block[i, index[v]] = 1.0
            blocks.append(block)
    if not blocks:
        raise ValueError("schema has no feature columns besides the label")
    X = np.hstack(blocks)

    label_col = table.column(schema.label)
    if schema.task == "classification":
        y = np.asarray(
            [1.0 if v == schema.positive_label else -1.0 for v in label_col.values]
        )
    else:
        y = np.asarray(label_col.values, dtype=float)

    x_bound = float(np.linalg.norm(X, axis=1).max())
    y_bound = float(np.abs(y).max())
    return EncodedDataset(
        X=X,
        y=y,
        x_bound=x_bound if x_bound > 0.0 else 1.0,
        y_bound=y_bound if y_bound > 0.0 else 1.0,
    )


def decode_one_hot(X, schema: Schema) -> list[dict[str, str]]:
    """Recover category names from the indicator blocks of an encoded matrix.

    Returns one dict per row mapping each categorical feature column to its
    category. Raises if an indicator block is not exactly one-hot.
    """
    X = np.asarray(X, dtype=float)
    out: list[dict[str, str]] = [dict() for _ in range(X.shape[0])]
    j = 0
    for spec in schema.feature_columns:
        if spec.kind == "numeric":
            j += 1
            continue
        width = len(spec.categories)
        block = X[:, j : j + width]
        if not np.array_equal(block.sum(axis=1), np.ones(X.shape[0])) or not np.all(
            (block == 0.0) | (block == 1.0)
        ):
            raise ValueError(f"columns {j}..{j + width - 1} are not a one-hot block")
        for i in range(X.shape[0]):
            out[i][spec.name] = spec.categories[int(np.argmax(block[i]))]
        j += width
    return out


def train_test_split(
    data: EncodedDataset,
    test_fraction: float,
    seed: int,
    *,
    stream_label: str = "train-test-split",
) -> tuple[EncodedDataset, EncodedDataset]:
    """Seeded-shuffle split with |test| = round(test_fraction * n).

    Both sides must end up nonempty. The shuffle stream is derived from
    (seed, stream_label), so a fixed pair always yields the same partition;
    pass a dataset-specific label to decorrelate splits across datasets.
    """
    test_fraction = float(test_fraction)
    if math.isnan(test_fraction) or not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must lie strictly between 0 and 1, got {test_fraction}")
    n = data.n
    if n < 2:
        raise ValueError(f"need at least 2 rows to split, got {n}")
    n_test = int(round(test_fraction * n))
    if n_test < 1 or n_test > n - 1:
        raise ValueError(
            f"test_fraction {test_fraction} gives a {n_test}-row test side for n={n}; "
            "both sides must be nonempty"
        )
    perm = NoiseDraw(seed=seed, stream_label=stream_label).generator().permutation(n)
    test_idx = np.sort(perm[:n_test])
    train_idx = np.sort(perm[n_test:])
    make = lambda idx: EncodedDataset(
        X=data.X[idx], y=data.y[idx], x_bound=data.x_bound, y_bound=data.y_bound
    )
    return make(train_idx), make(test_idx)


def preprocess(
    data: EncodedDataset,
    x_clip: float,
    tau_label: float | None = None,
    *,
    add_intercept: bool = False,
) -> EncodedDataset:
    """Clip feature rows (and optionally labels) and record the clip bounds.

    Rows go through L2 clipping at x_clip, which becomes the recorded
    x_bound. tau_label selects the single-shot path: labels are clamped
    into [-tau_label, tau_label] and y_bound = tau_label. With
    tau_label=None (the boosted path) labels pass through untouched and
    y_bound is their empirical max magnitude, since boosting clips
    residuals per round instead. add_intercept appends a constant-1 column
    before clipping, which changes row norms.
    """
    x_clip = float(x_clip)
    if math.isnan(x_clip) or math.isinf(x_clip) or x_clip <= 0.0:
        raise ValueError(f"x_clip must be a positive finite real, got {x_clip}")
    X = data.X
    if add_intercept:
        X = np.hstack([X, np.ones((data.n, 1))])
    X = clip_rows_l2(X, x_clip)
    if tau_label is None:
        y = data.y
        y_bound = float(np.abs(y).max())
        if y_bound == 0.0:
            y_bound = 1.0
    else:
        tau_label = float(tau_label)
        if math.isnan(tau_label) or math.isinf(tau_label) or tau_label <= 0.0:
            raise ValueError(f"tau_label must be a positive finite real, got {tau_label}")
        y = clip_values(data.y, tau_label)
        y_bound = tau_label
    return EncodedDataset(X=X, y=y, x_bound=x_clip, y_bound=y_bound)
