"""Survey datasets: schema, CSV loading, min-max normalisation, synthetic fixtures."""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError
from .rng import make_rng

FEATURE_KINDS = ("binary", "ordinal", "continuous")


@dataclass(frozen=True)
class Feature:
    name: str
    kind: str
    low: float
    high: float

    def __post_init__(self):
        if not self.name:
            raise InputError("feature name must be non-empty")
        if self.kind not in FEATURE_KINDS:
            raise InputError(f"feature {self.name!r}: unknown kind {self.kind!r}")
        if not self.low <= self.high:
            raise InputError(f"feature {self.name!r}: valid range has lower > upper")


@dataclass(frozen=True)
class FeatureSchema:
    features: tuple[Feature, ...]
    label_name: str

    def __post_init__(self):
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            dup = sorted({n for n in names if names.count(n) > 1})
            raise InputError(f"duplicate feature names: {', '.join(dup)}")
        if not self.label_name:
            raise InputError("label name must be non-empty")
        if self.label_name in names:
            raise InputError(f"label {self.label_name!r} is also listed as a feature")

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.features]

    def __len__(self):
        return len(self.features)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(name) from None

    def subset(self, indices: Sequence[int]) -> "FeatureSchema":
        return FeatureSchema(tuple(self.features[i] for i in indices), self.label_name)

    @classmethod
    def from_dict(cls, spec: dict) -> "FeatureSchema":
        try:
            feats = tuple(
                Feature(f["name"], f.get("kind", "continuous"), float(f["range"][0]), float(f["range"][1]))
                for f in spec["features"]
            )
            return cls(feats, spec["label"])
        except (KeyError, TypeError, IndexError) as exc:
            raise InputError(f"malformed schema: {exc!r}") from exc

    def to_dict(self) -> dict:
        return {
            "label": self.label_name,
            "features": [{"name": f.name, "kind": f.kind, "range": [f.low, f.high]} for f in self.features],
        }

    @classmethod
    def from_json(cls, path) -> "FeatureSchema":
        try:
            with open(path) as fh:
                return cls.from_dict(json.load(fh))
        except OSError as exc:
            raise InputError(f"cannot read schema {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise InputError(f"schema {path} is not valid JSON: {exc}") from exc


def brfss_schema() -> FeatureSchema:
    """The 21-question BRFSS 2015 heart-disease schema, in Kaggle column order."""
    text = resources.files("hdsurvey").joinpath("schemas/brfss.json").read_text()
    return FeatureSchema.from_dict(json.loads(text))


def generic_schema(n_features: int, label_name: str = "label") -> FeatureSchema:
    return FeatureSchema(
        tuple(Feature(f"x{i:02d}", "continuous", 0.0, 1.0) for i in range(n_features)), label_name
    )


@dataclass(frozen=True)
class MinMaxTransform:
    """Per-column (min, max) learned on training data."""

    mins: np.ndarray
    maxs: np.ndarray

    @classmethod
    def fit(cls, matrix: np.ndarray) -> "MinMaxTransform":
        if matrix.shape[0] == 0:
            return cls(np.zeros(matrix.shape[1]), np.zeros(matrix.shape[1]))
        return cls(matrix.min(axis=0), matrix.max(axis=0))

    def apply(self, matrix: np.ndarray) -> np.ndarray:
        span = self.maxs - self.mins
        safe = np.where(span > 0, span, 1.0)
        out = (matrix - self.mins) / safe
        # zero-range columns map to 0; held-out values outside the training range are clipped
        out[:, span <= 0] = 0.0
        return np.clip(out, 0.0, 1.0)

    def subset(self, indices: Sequence[int]) -> "MinMaxTransform":
        idx = list(indices)
        return MinMaxTransform(self.mins[idx], self.maxs[idx])


@dataclass(frozen=True)
class ClassCounts:
    negatives: int
    positives: int

    @property
    def total(self) -> int:
        return self.negatives + self.positives


@dataclass(frozen=True)
class Dataset:
    """Immutable feature matrix + binary labels (1 = heart disease or attack)."""

    matrix: np.ndarray
    labels: np.ndarray
    schema: FeatureSchema
    normalized: bool = False
    transform: MinMaxTransform | None = field(default=None, compare=False)

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=np.float64, copy=True)
        labels = np.array(self.labels, copy=True)
        if matrix.ndim != 2:
            matrix = matrix.reshape(-1, len(self.schema))
        if labels.size and not np.isin(labels, (0, 1)).all():
            raise InputError("labels must be 0 or 1")
        labels = labels.astype(np.int8)
        if matrix.shape[0] != labels.shape[0]:
            raise InputError(f"{matrix.shape[0]} rows but {labels.shape[0]} labels")
        if matrix.shape[1] != len(self.schema):
            raise InputError(f"{matrix.shape[1]} columns but schema has {len(self.schema)} features")
        if self.normalized and matrix.size and (matrix.min() < 0.0 or matrix.max() > 1.0):
            raise InputError("normalized dataset has values outside [0, 1]")
        matrix.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "labels", labels)

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_features(self) -> int:
        return self.matrix.shape[1]

    @property
    def feature_names(self) -> list[str]:
        return self.schema.names

    def take(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=np.intp)
        return Dataset(self.matrix[rows], self.labels[rows], self.schema, self.normalized, self.transform)

    def select_features(self, indices: Sequence[int]) -> "Dataset":
        idx = list(indices)
        transform = self.transform.subset(idx) if self.transform is not None else None
        return Dataset(self.matrix[:, idx], self.labels, self.schema.subset(idx), self.normalized, transform)

    def equals(self, other: "Dataset") -> bool:
        return (
            self.schema == other.schema
            and self.normalized == other.normalized
            and np.array_equal(self.matrix, other.matrix)
            and np.array_equal(self.labels, other.labels)
        )


def load_csv(path, schema: FeatureSchema, strict_range: bool = False) -> Dataset:
    """Read a survey CSV whose header names the label and every schema feature.

    Columns may appear in any order; they are rearranged to schema order.
    Values outside a feature's valid range raise when ``strict_range`` is set
    and emit a ``UserWarning`` otherwise.
    """
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no such file: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise InputError(f"{path}: empty file, expected a header row") from None
        expected = [schema.label_name] + schema.names
        for name in header:
            if name not in expected:
                raise InputError(f"{path}: unexpected column {name!r}")
        for name in expected:
            if name not in header:
                raise InputError(f"{path}: missing column {name!r}")
        if len(header) != len(set(header)):
            raise InputError(f"{path}: duplicate column names in header")
        col = [header.index(name) for name in expected]
        rows = []
        for lineno, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != len(header):
                raise InputError(f"{path}: row {lineno} has {len(record)} fields, expected {len(header)}")
            values = []
            for j in col:
                cell = record[j].strip()
                try:
                    v = float(cell)
                except ValueError:
                    raise InputError(f"{path}: row {lineno}, column {header[j]!r}: non-numeric value {cell!r}") from None
                if not math.isfinite(v):
                    raise InputError(f"{path}: row {lineno}, column {header[j]!r}: missing or non-finite value")
                values.append(v)
            rows.append(values)

    data = np.array(rows, dtype=np.float64).reshape(len(rows), len(expected))
    labels = data[:, 0]
    if labels.size and not np.isin(labels, (0.0, 1.0)).all():
        bad = int(np.flatnonzero(~np.isin(labels, (0.0, 1.0)))[0])
        raise InputError(f"{path}: row {bad + 2}, column {schema.label_name!r}: label must be 0 or 1")
    matrix = data[:, 1:]
    _check_ranges(matrix, schema, path, strict_range)
    return Dataset(matrix, labels.astype(np.int8), schema)


def _check_ranges(matrix, schema, path, strict):
    for j, feat in enumerate(schema.features):
        col = matrix[:, j]
        bad = np.flatnonzero((col < feat.low) | (col > feat.high))
        if bad.size:
            msg = (f"{path}: column {feat.name!r} has {bad.size} value(s) outside "
                   f"[{feat.low:g}, {feat.high:g}], first at row {bad[0] + 2}")
            if strict:
                raise InputError(msg)
            warnings.warn(msg, stacklevel=3)


def write_csv(d: Dataset, path) -> None:
    """Write ``d`` with the label first; floats use ``repr`` so loading round-trips exactly."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([d.schema.label_name] + d.schema.names)
        for label, row in zip(d.labels, d.matrix):
            writer.writerow([int(label)] + [repr(float(v)) for v in row])


def class_counts(d: Dataset) -> ClassCounts:
    pos = int(np.count_nonzero(d.labels == 1))
    return ClassCounts(d.n_rows - pos, pos)


def normalize(d: Dataset) -> Dataset:
    """Min-max scale every column to [0, 1]; the fitted transform is kept on the result."""
    if d.normalized:
        raise ValueError("dataset is already normalized")
    transform = MinMaxTransform.fit(d.matrix)
    return Dataset(transform.apply(d.matrix), d.labels, d.schema, True, transform)


def apply_transform(d: Dataset, transform: MinMaxTransform) -> Dataset:
    """Scale held-out data with a transform fitted on training data."""
    if d.normalized:
        raise ValueError("dataset is already normalized")
    return Dataset(transform.apply(d.matrix), d.labels, d.schema, True, transform)


def synthesize(n_neg: int, n_pos: int, signal_features: Iterable[int] = (), signal_strength: float = 1.0,
               seed: int = 0, n_features: int = 21) -> Dataset:
    """Planted-signal fixture.

    Every feature starts as U[0, 1) noise ``u``. A signal feature becomes
    ``u * (1 - s/2) + s * y / 2``: at ``s = 0`` it is pure noise, at ``s = 1``
    negatives fall in [0, 0.5) and positives in [0.5, 1).
    """
    signal = sorted(set(int(i) for i in signal_features))
    if any(i < 0 or i >= n_features for i in signal):
        raise InputError(f"signal feature index out of range 0..{n_features - 1}: {signal}")
    if n_neg < 0 or n_pos < 0:
        raise InputError("class sizes must be non-negative")
    if not 0.0 <= signal_strength <= 1.0:
        raise InputError("signal_strength must lie in [0, 1]")
    rng = make_rng(seed)
    labels = np.concatenate([np.zeros(n_neg, dtype=np.int8), np.ones(n_pos, dtype=np.int8)])
    labels = labels[rng.permutation(labels.size)]
    matrix = rng.random((labels.size, n_features))
    s = float(signal_strength)
    for j in signal:
        matrix[:, j] = matrix[:, j] * (1.0 - s / 2.0) + s * labels / 2.0
    return Dataset(matrix, labels, generic_schema(n_features))
