import json
import warnings

import numpy as np
import pytest
from conftest import make_dataset
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hdsurvey import classifiers as clf
from hdsurvey.dataset import (Dataset, FeatureSchema, MinMaxTransform, apply_transform, brfss_schema,
                              class_counts, generic_schema, load_csv, normalize, synthesize, write_csv)
from hdsurvey.errors import InputError
from hdsurvey.sampling import train_test_split


def test_brfss_schema_has_21_questions():
    schema = brfss_schema()
    assert len(schema) == 21
    assert schema.label_name == "HeartDiseaseorAttack"
    assert schema.names[:4] == ["HighBP", "HighChol", "CholCheck", "BMI"]
    for name in ["GenHlth", "Age", "HighBP", "HighChol", "Sex", "Stroke", "DiffWalk", "BMI", "Diabetes", "PhysHlth"]:
        assert name in schema.names


def test_schema_rejects_duplicates_and_bad_ranges():
    with pytest.raises(InputError, match="duplicate"):
        FeatureSchema.from_dict({"label": "y", "features": [{"name": "a", "range": [0, 1]}] * 2})
    with pytest.raises(InputError, match="lower > upper"):
        FeatureSchema.from_dict({"label": "y", "features": [{"name": "a", "range": [2, 1]}]})
    with pytest.raises(InputError):
        FeatureSchema.from_dict({"label": "y", "features": [{"name": "", "range": [0, 1]}]})


def test_schema_json_round_trip(tmp_path):
    schema = brfss_schema()
    path = tmp_path / "schema.json"
    path.write_text(json.dumps(schema.to_dict()))
    assert FeatureSchema.from_json(path) == schema


def _header(schema):
    return ",".join([schema.label_name] + schema.names)


def test_load_empty_file_with_header(tmp_path):
    schema = brfss_schema()
    path = tmp_path / "empty.csv"
    path.write_text(_header(schema) + "\n")
    d = load_csv(path, schema)
    assert d.n_rows == 0 and d.n_features == 21
    cc = class_counts(d)
    assert (cc.negatives, cc.positives) == (0, 0)


def test_load_single_row(tmp_path):
    schema = brfss_schema()
    row = ["1", "1", "0"] + ["0"] * 19
    # BMI, GenHlth, Age, Education, Income have lower bounds above 0
    for name, v in (("BMI", "25"), ("GenHlth", "3"), ("Age", "9"), ("Education", "4"), ("Income", "5")):
        row[1 + schema.index(name)] = v
    path = tmp_path / "one.csv"
    path.write_text(_header(schema) + "\n" + ",".join(row) + "\n")
    d = load_csv(path, schema, strict_range=True)
    assert d.n_rows == 1
    assert d.labels.tolist() == [1]
    assert d.matrix[0, 0] == 1.0 and d.matrix[0, 1] == 0.0
    assert not d.normalized


def test_load_reorders_columns_to_schema(tmp_path):
    schema = generic_schema(3)
    path = tmp_path / "d.csv"
    path.write_text("x02,label,x00,x01\n0.3,1,0.1,0.2\n")
    d = load_csv(path, schema)
    assert d.matrix.tolist() == [[0.1, 0.2, 0.3]]


def test_load_errors(tmp_path):
    schema = generic_schema(2)
    with pytest.raises(InputError, match="no such file"):
        load_csv(tmp_path / "missing.csv", schema)
    p = tmp_path / "bad_header.csv"
    p.write_text("label,x00,xyz\n1,0,0\n")
    with pytest.raises(InputError, match="'xyz'"):
        load_csv(p, schema)
    p.write_text("label,x00\n1,0\n")
    with pytest.raises(InputError, match="missing column 'x01'"):
        load_csv(p, schema)
    p.write_text("label,x00,x01\n1,0,0\n0,abc,0\n")
    with pytest.raises(InputError, match=r"row 3, column 'x00'"):
        load_csv(p, schema)
    p.write_text("label,x00,x01\n1,0,\n")
    with pytest.raises(InputError, match="x01"):
        load_csv(p, schema)
    p.write_text("label,x00,x01\n2,0,0\n")
    with pytest.raises(InputError, match="label must be 0 or 1"):
        load_csv(p, schema)


def test_out_of_range_warns_or_raises(tmp_path):
    schema = generic_schema(1)
    p = tmp_path / "r.csv"
    p.write_text("label,x00\n0,1.5\n1,0.5\n")
    with pytest.warns(UserWarning, match="outside"):
        load_csv(p, schema)
    with pytest.raises(InputError, match="outside"):
        load_csv(p, schema, strict_range=True)


def test_csv_round_trip_is_exact(tmp_path):
    d = synthesize(40, 30, [1], 0.7, seed=5, n_features=4)
    p = tmp_path / "rt.csv"
    write_csv(d, p)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        back = load_csv(p, d.schema)
    assert back.equals(d)


def test_class_counts():
    d = make_dataset([[0.0], [0.0], [0.0]], [1, 1, 0])
    cc = class_counts(d)
    assert (cc.negatives, cc.positives) == (1, 2)
    assert cc.total == 3


@given(st.lists(st.integers(0, 1), max_size=200))
def test_class_counts_sum_to_rows(labels):
    d = make_dataset(np.zeros((len(labels), 2)), labels, normalized=False)
    cc = class_counts(d)
    assert cc.negatives + cc.positives == d.n_rows


def test_dataset_invariants():
    with pytest.raises(InputError):
        make_dataset([[0.0], [1.0]], [0])
    with pytest.raises(InputError):
        make_dataset([[0.0], [1.0]], [0, 2])
    with pytest.raises(InputError):
        make_dataset([[0.0], [1.5]], [0, 1], normalized=True)
    with pytest.raises(InputError):
        Dataset(np.zeros((2, 3)), [0, 1], generic_schema(2))
    d = make_dataset([[0.0], [1.0]], [0, 1])
    with pytest.raises(ValueError):
        d.matrix[0, 0] = 5.0


def test_normalize_examples():
    d = make_dataset([[2.0, 5.0, 0.0], [4.0, 5.0, 1.0], [6.0, 5.0, 1.0]], [0, 1, 0], normalized=False)
    n = normalize(d)
    assert n.normalized
    assert n.matrix[:, 0].tolist() == [0.0, 0.5, 1.0]
    assert n.matrix[:, 1].tolist() == [0.0, 0.0, 0.0]
    assert n.matrix[:, 2].tolist() == [0.0, 1.0, 1.0]
    with pytest.raises(ValueError):
        normalize(n)


@settings(max_examples=50)
@given(arrays(np.float64, st.tuples(st.integers(1, 30), st.integers(1, 5)),
              elements=st.floats(-1e6, 1e6, allow_nan=False)))
def test_normalize_reapplying_transform_reproduces_matrix(matrix):
    d = make_dataset(matrix, np.zeros(matrix.shape[0], dtype=int), normalized=False)
    n = normalize(d)
    assert n.matrix.min() >= 0.0 and n.matrix.max() <= 1.0
    assert np.allclose(n.transform.apply(d.matrix), n.matrix, atol=1e-12, rtol=0)


def test_held_out_values_are_clipped():
    t = MinMaxTransform(np.array([0.0]), np.array([10.0]))
    assert t.apply(np.array([[-5.0], [5.0], [20.0]])).ravel().tolist() == [0.0, 0.5, 1.0]
    d = make_dataset([[20.0]], [1], normalized=False)
    assert apply_transform(d, t).matrix[0, 0] == 1.0


def test_synthesize_separates_and_is_deterministic():
    a = synthesize(1000, 1000, {0}, 1.0, seed=3)
    b = synthesize(1000, 1000, {0}, 1.0, seed=3)
    assert a.equals(b)
    neg, pos = a.matrix[a.labels == 0, 0], a.matrix[a.labels == 1, 0]
    assert neg.max() < pos.min()
    c = synthesize(100, 0, [], 0.0, seed=9)
    assert c.labels.tolist() == [0] * 100
    with pytest.raises(InputError):
        synthesize(10, 10, [21], 1.0, seed=0)


@pytest.mark.slow
def test_chance_level_without_signal():
    # A single draw of 600 test rows has a standard error of 0.02, so one
    # realization can land past 0.55 by luck (seed 21 does, for GaussianNB).
    # Check across 22 independent datasets instead.
    accs = {k: [] for k in clf.ALL_KINDS}
    for seed in range(22):
        d = synthesize(1000, 1000, [], 0.0, seed=seed)
        train, test = train_test_split(d, 0.3, seed=4)
        train = normalize(train)
        test = apply_transform(test, train.transform)
        for kind in clf.ALL_KINDS:
            model = clf.train(kind, train, seed=1)
            accs[kind].append(float(np.mean(clf.predict_labels(model, test.matrix) == test.labels)))
    for kind, values in accs.items():
        assert np.mean(values) <= 0.52, (kind, values)
        assert sum(v > 0.55 for v in values) <= 2, (kind, values)
