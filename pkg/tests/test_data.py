"""CSV loading, schema validation, encoding, splitting, preprocessing."""

import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from privreg.data import (
    ColumnSpec,
    Schema,
    decode_one_hot,
    load_csv,
    one_hot_encode,
    preprocess,
    schema_from_json,
    train_test_split,
)
from privreg.regression import EncodedDataset


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


NUM_SCHEMA = Schema(
    columns=(
        ColumnSpec(name="a", kind="numeric"),
        ColumnSpec(name="y", kind="numeric"),
    ),
    label="y",
    task="regression",
)


class TestSchema:
    def test_from_json_file(self, classification_csv):
        schema = schema_from_json(classification_csv["schema"])
        assert schema.task == "classification"
        assert schema.positive_label == "yes"
        assert [c.name for c in schema.feature_columns] == ["x", "color"]
        assert schema.label_column.name == "outcome"

    def test_positive_label_defaults_to_last_category(self):
        schema = schema_from_json(
            {
                "columns": [
                    {"name": "a", "kind": "numeric"},
                    {"name": "lab", "kind": "categorical", "categories": ["n", "p"]},
                ],
                "label": "lab",
                "task": "classification",
            }
        )
        assert schema.positive_label == "p"

    def test_classification_label_must_be_binary_categorical(self):
        with pytest.raises(ValueError):
            schema_from_json(
                {
                    "columns": [
                        {"name": "a", "kind": "numeric"},
                        {"name": "lab", "kind": "categorical", "categories": ["x", "y", "z"]},
                    ],
                    "label": "lab",
                    "task": "classification",
                }
            )
        with pytest.raises(ValueError):
            schema_from_json(
                {
                    "columns": [
                        {"name": "a", "kind": "numeric"},
                        {"name": "lab", "kind": "numeric"},
                    ],
                    "label": "lab",
                    "task": "classification",
                }
            )

    def test_rejects_unknown_label_and_task(self):
        with pytest.raises(ValueError):
            Schema(columns=(ColumnSpec(name="a", kind="numeric"),), label="zz", task="regression")
        with pytest.raises(ValueError):
            Schema(
                columns=(
                    ColumnSpec(name="a", kind="numeric"),
                    ColumnSpec(name="y", kind="numeric"),
                ),
                label="y",
                task="ranking",
            )

    def test_rejects_duplicate_columns(self):
        with pytest.raises(ValueError):
            Schema(
                columns=(
                    ColumnSpec(name="a", kind="numeric"),
                    ColumnSpec(name="a", kind="numeric"),
                ),
                label="a",
                task="regression",
            )

    def test_categorical_needs_categories(self):
        with pytest.raises(ValueError):
            ColumnSpec(name="c", kind="categorical")
        with pytest.raises(ValueError):
            ColumnSpec(name="c", kind="other")


class TestLoadCsv:
    def test_loads_numeric(self, tmp_path):
        p = _write(tmp_path, "d.csv", "a,y\n1.5,2.0\n-0.5,3.0\n")
        table = load_csv(p, NUM_SCHEMA)
        assert table.row_count == 2
        assert table.column("a").values == (1.5, -0.5)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_csv(tmp_path / "absent.csv", NUM_SCHEMA)

    def test_header_mismatch(self, tmp_path):
        p = _write(tmp_path, "d.csv", "a,b\n1,2\n")
        with pytest.raises(ValueError, match="header"):
            load_csv(p, NUM_SCHEMA)

    def test_empty_and_headerless(self, tmp_path):
        p = _write(tmp_path, "d.csv", "")
        with pytest.raises(ValueError, match="empty"):
            load_csv(p, NUM_SCHEMA)
        p2 = _write(tmp_path, "d2.csv", "a,y\n")
        with pytest.raises(ValueError, match="no rows"):
            load_csv(p2, NUM_SCHEMA)

    def test_parse_error_names_row_and_column(self, tmp_path):
        p = _write(tmp_path, "d.csv", "a,y\n1.0,2.0\nfoo,3.0\n")
        with pytest.raises(ValueError, match=r"row 2, column 'a'"):
            load_csv(p, NUM_SCHEMA)

    def test_missing_value_located(self, tmp_path):
        p = _write(tmp_path, "d.csv", "a,y\n1.0,\n")
        with pytest.raises(ValueError, match=r"row 1, column 'y'.*missing"):
            load_csv(p, NUM_SCHEMA)

    def test_non_finite_rejected(self, tmp_path):
        p = _write(tmp_path, "d.csv", "a,y\ninf,1.0\n")
        with pytest.raises(ValueError, match="non-finite"):
            load_csv(p, NUM_SCHEMA)

    def test_ragged_row(self, tmp_path):
        p = _write(tmp_path, "d.csv", "a,y\n1.0,2.0,3.0\n")
        with pytest.raises(ValueError, match=r"row 1 has 3 fields"):
            load_csv(p, NUM_SCHEMA)

    def test_unknown_category(self, tmp_path, classification_csv):
        schema = schema_from_json(classification_csv["schema"])
        p = _write(tmp_path, "d.csv", "x,color,outcome\n0.1,green,yes\n")
        with pytest.raises(ValueError, match=r"unknown category 'green'"):
            load_csv(p, schema)

    def test_full_fixture_loads(self, classification_csv):
        schema = schema_from_json(classification_csv["schema"])
        table = load_csv(classification_csv["csv"], schema)
        assert table.row_count == 120


class TestOneHotEncode:
    def test_indicator_layout(self, tmp_path):
        schema = schema_from_json(
            {
                "columns": [
                    {"name": "c", "kind": "categorical", "categories": ["red", "blue"]},
                    {"name": "y", "kind": "numeric"},
                ],
                "label": "y",
                "task": "regression",
            }
        )
        p = _write(tmp_path, "d.csv", "c,y\nred,1.0\nblue,2.0\n")
        data = one_hot_encode(load_csv(p, schema), schema)
        assert np.array_equal(data.X, [[1.0, 0.0], [0.0, 1.0]])
        assert np.array_equal(data.y, [1.0, 2.0])

    def test_classification_labels_signed(self, classification_csv):
        schema = schema_from_json(classification_csv["schema"])
        data = one_hot_encode(load_csv(classification_csv["csv"], schema), schema)
        assert set(np.unique(data.y)) == {-1.0, 1.0}
        assert data.y_bound == 1.0
        # each row: numeric feature plus a one-hot pair
        assert data.X.shape == (120, 3)
        assert np.array_equal(data.X[:, 1:].sum(axis=1), np.ones(120))

    def test_empirical_bounds(self, tmp_path):
        p = _write(tmp_path, "d.csv", "a,y\n3.0,5.0\n-4.0,-1.0\n")
        data = one_hot_encode(load_csv(p, NUM_SCHEMA), NUM_SCHEMA)
        assert data.x_bound == 4.0
        assert data.y_bound == 5.0

    def test_zero_data_bounds_floored(self, tmp_path):
        p = _write(tmp_path, "d.csv", "a,y\n0.0,0.0\n")
        data = one_hot_encode(load_csv(p, NUM_SCHEMA), NUM_SCHEMA)
        assert data.x_bound == 1.0 and data.y_bound == 1.0

    def test_decode_round_trip(self, classification_csv):
        schema = schema_from_json(classification_csv["schema"])
        table = load_csv(classification_csv["csv"], schema)
        data = one_hot_encode(table, schema)
        decoded = decode_one_hot(data.X, schema)
        assert [d["color"] for d in decoded] == list(table.column("color").values)

    def test_decode_rejects_broken_block(self):
        schema = schema_from_json(
            {
                "columns": [
                    {"name": "c", "kind": "categorical", "categories": ["a", "b"]},
                    {"name": "y", "kind": "numeric"},
                ],
                "label": "y",
                "task": "regression",
            }
        )
        with pytest.raises(ValueError, match="one-hot"):
            decode_one_hot(np.array([[1.0, 1.0]]), schema)


def _toy_dataset(n):
    rng = np.random.default_rng(0)
    X = rng.normal(size=(n, 2))
    y = rng.normal(size=n)
    return EncodedDataset(
        X=X,
        y=y,
        x_bound=float(np.linalg.norm(X, axis=1).max()),
        y_bound=float(np.abs(y).max()),
    )


class TestTrainTestSplit:
    def test_sizes(self):
        train, test = train_test_split(_toy_dataset(10), 0.2, seed=0)
        assert (train.n, test.n) == (8, 2)
        train, test = train_test_split(_toy_dataset(4), 0.5, seed=0)
        assert (train.n, test.n) == (2, 2)

    def test_deterministic_and_seed_sensitive(self):
        data = _toy_dataset(30)
        a1, b1 = train_test_split(data, 0.3, seed=5)
        a2, b2 = train_test_split(data, 0.3, seed=5)
        a3, _ = train_test_split(data, 0.3, seed=6)
        assert np.array_equal(a1.X, a2.X) and np.array_equal(b1.y, b2.y)
        assert not np.array_equal(a1.X, a3.X)

    def test_stream_label_decorrelates(self):
        data = _toy_dataset(30)
        a, _ = train_test_split(data, 0.3, seed=5, stream_label="split/one")
        b, _ = train_test_split(data, 0.3, seed=5, stream_label="split/two")
        assert not np.array_equal(a.X, b.X)

    @given(
        n=st.integers(min_value=2, max_value=60),
        frac_pct=st.integers(min_value=1, max_value=99),
        seed=st.integers(min_value=0, max_value=2**32),
    )
    def test_partition_property(self, n, frac_pct, seed):
        frac = frac_pct / 100.0
        n_test = int(round(frac * n))
        data = _toy_dataset(n)
        if n_test < 1 or n_test > n - 1:
            with pytest.raises(ValueError):
                train_test_split(data, frac, seed=seed)
            return
        train, test = train_test_split(data, frac, seed=seed)
        assert train.n + test.n == n
        # every original row appears exactly once across the two sides
        combined = np.vstack([train.X, test.X])
        assert np.array_equal(
            np.sort(combined.view([("", float)] * 2), axis=0),
            np.sort(data.X.view([("", float)] * 2), axis=0),
        )

    def test_rejects_bad_fraction(self):
        with pytest.raises(ValueError):
            train_test_split(_toy_dataset(10), 0.0, seed=0)
        with pytest.raises(ValueError):
            train_test_split(_toy_dataset(10), 1.0, seed=0)


class TestPreprocess:
    def test_row_clipping_example(self):
        data = EncodedDataset(
            X=np.array([[3.0, 4.0]]), y=np.array([0.5]), x_bound=5.0, y_bound=1.0
        )
        out = preprocess(data, x_clip=1.0)
        assert np.allclose(out.X, [[0.6, 0.8]], atol=1e-15)
        assert out.x_bound == 1.0

    def test_label_path_with_tau(self):
        data = EncodedDataset(
            X=np.array([[0.1], [0.1], [0.1]]),
            y=np.array([-5.0, 0.2, 12.0]),
            x_bound=1.0,
            y_bound=12.0,
        )
        out = preprocess(data, x_clip=1.0, tau_label=1.0)
        assert out.y.tolist() == [-1.0, 0.2, 1.0]
        assert out.y_bound == 1.0

    def test_label_passthrough_without_tau(self):
        data = EncodedDataset(
            X=np.array([[0.1], [0.1]]), y=np.array([-7.0, 3.0]), x_bound=1.0, y_bound=7.0
        )
        out = preprocess(data, x_clip=1.0)
        assert np.array_equal(out.y, data.y)
        assert out.y_bound == 7.0

    def test_intercept_added_before_clipping(self):
        data = EncodedDataset(X=np.array([[1.0, 0.0]]), y=np.array([0.0]), x_bound=1.0, y_bound=1.0)
        out = preprocess(data, x_clip=1.0, add_intercept=True)
        assert out.X.shape == (1, 3)
        # [1, 0, 1] has norm sqrt2, so the clip rescales the whole row,
        # intercept coordinate included.
        assert np.allclose(out.X, [[1.0 / math.sqrt(2.0), 0.0, 1.0 / math.sqrt(2.0)]], atol=1e-15)
        assert abs(np.linalg.norm(out.X[0]) - 1.0) <= 1e-12

    def test_zero_labels_bound_floored(self):
        data = EncodedDataset(X=np.array([[0.5]]), y=np.array([0.0]), x_bound=1.0, y_bound=1.0)
        out = preprocess(data, x_clip=1.0)
        assert out.y_bound == 1.0

    def test_rejects_bad_knobs(self):
        data = _toy_dataset(4)
        with pytest.raises(ValueError):
            preprocess(data, x_clip=0.0)
        with pytest.raises(ValueError):
            preprocess(data, x_clip=1.0, tau_label=-1.0)
