"""Seven classifiers behind one train / predict / importance contract.

Scores lie in [0, 1] and the predicted label is 1 iff score >= 0.5.
"""
from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass, field, fields
from typing import Any

import numpy as np

from ..dataset import Dataset
from ..errors import InputError
from ..rng import make_rng
from . import linear, neighbors, trees
from .trees import Tree

FORMAT_NAME = "hdsurvey-model"
FORMAT_VERSION = 1


class ModelKind(str, enum.Enum):
    LOGREG = "LogReg"
    LINEAR_SVM = "LinearSVM"
    SGD_LOGREG = "SgdLogReg"
    RANDOM_FOREST = "RandomForest"
    GRAD_BOOST = "GradBoost"
    KNN = "Knn"
    GAUSSIAN_NB = "GaussianNB"

    @classmethod
    def parse(cls, name: str) -> "ModelKind":
        for kind in cls:
            if name.lower() in (kind.value.lower(), kind.name.lower()):
                return kind
        raise InputError(f"unknown model kind {name!r}; choose from {', '.join(k.value for k in cls)}")


ALL_KINDS = tuple(ModelKind)
IMPORTANCE_KINDS = (ModelKind.LOGREG, ModelKind.LINEAR_SVM, ModelKind.SGD_LOGREG,
                    ModelKind.RANDOM_FOREST, ModelKind.GRAD_BOOST)
LINEAR_KINDS = (ModelKind.LOGREG, ModelKind.LINEAR_SVM, ModelKind.SGD_LOGREG)


@dataclass(frozen=True)
class LogRegParams:
    lr: float = 0.1
    l2: float = 1e-3
    epochs: int = 500
    tol: float = 1e-6


@dataclass(frozen=True)
class SvmParams:
    l2: float = 1e-3
    epochs: int = 500


@dataclass(frozen=True)
class SgdParams:
    lr: float = 0.05
    l2: float = 1e-3
    epochs: int = 50


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int = 8
    max_features: int | None = None  # None: ceil(sqrt(p))
    bootstrap: bool = True


@dataclass(frozen=True)
class BoostParams:
    rounds: int = 100
    shrinkage: float = 0.1
    max_depth: int = 3


@dataclass(frozen=True)
class KnnParams:
    k: int = 5
    metric: str = "euclidean"


@dataclass(frozen=True)
class GnbParams:
    var_smoothing: float = 1e-9


_SECTIONS = {
    "LogReg": ("logreg", LogRegParams),
    "LinearSVM": ("svm", SvmParams),
    "SgdLogReg": ("sgd", SgdParams),
    "RandomForest": ("forest", ForestParams),
    "GradBoost": ("boost", BoostParams),
    "Knn": ("knn", KnnParams),
    "GaussianNB": ("gnb", GnbParams),
}


@dataclass(frozen=True)
class Hyperparams:
    logreg: LogRegParams = field(default_factory=LogRegParams)
    svm: SvmParams = field(default_factory=SvmParams)
    sgd: SgdParams = field(default_factory=SgdParams)
    forest: ForestParams = field(default_factory=ForestParams)
    boost: BoostParams = field(default_factory=BoostParams)
    knn: KnnParams = field(default_factory=KnnParams)
    gnb: GnbParams = field(default_factory=GnbParams)

    def __post_init__(self):
        for section in fields(self):
            for f in fields(getattr(self, section.name)):
                v = getattr(getattr(self, section.name), f.name)
                if isinstance(v, bool) or v is None or isinstance(v, str):
                    continue
                if f.name in ("epochs", "n_trees", "max_depth", "max_features", "rounds", "k") and v < 1:
                    raise InputError(f"{section.name}.{f.name} must be positive")
                if v < 0:
                    raise InputError(f"{section.name}.{f.name} must be non-negative")
        if self.knn.metric not in neighbors.METRICS:
            raise InputError(f"knn.metric must be one of {neighbors.METRICS}")

    def for_kind(self, kind: ModelKind):
        return getattr(self, _SECTIONS[kind.value][0])

    def to_dict(self) -> dict:
        return {kind: asdict(getattr(self, attr)) for kind, (attr, _) in _SECTIONS.items()}

    @classmethod
    def from_dict(cls, d: dict | None) -> "Hyperparams":
        """Build from ``{"LogReg": {"lr": ...}, ...}``; omitted keys keep their defaults."""
        kwargs = {}
        for key, section in (d or {}).items():
            kind = ModelKind.parse(key).value
            attr, klass = _SECTIONS[kind]
            allowed = {f.name for f in fields(klass)}
            unknown = set(section) - allowed
            if unknown:
                raise InputError(f"unknown {kind} hyperparameter(s): {', '.join(sorted(unknown))}")
            kwargs[attr] = klass(**section)
        return cls(**kwargs)


@dataclass
class FeatureImportance:
    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)


@dataclass
class TrainedModel:
    kind: ModelKind
    params: dict[str, Any]
    feature_names: tuple[str, ...]

    @property
    def n_features(self) -> int:
        return len(self.feature_names)


def _check_trainable(data: Dataset):
    if not data.normalized:
        raise InputError("training data must be normalized")
    if data.n_rows == 0:
        raise InputError("training data is empty")
    if np.unique(data.labels).size < 2:
        raise InputError("training data contains a single class")


def train(kind: ModelKind | str, data: Dataset, hp: Hyperparams | None = None, seed: int = 0,
          backend: str | None = None) -> TrainedModel:
    """Fit one classifier; deterministic in ``(data, hp, seed)``."""
    kind = ModelKind.parse(kind) if isinstance(kind, str) else kind
    hp = hp or Hyperparams()
    _check_trainable(data)
    X = np.asarray(data.matrix, dtype=np.float64)
    y = data.labels.astype(np.float64)
    h = hp.for_kind(kind)

    if kind is ModelKind.LOGREG:
        w, b = linear.fit_logreg(X, y, h.lr, h.l2, h.epochs, h.tol)
        params = {"weights": w, "intercept": b}
    elif kind is ModelKind.SGD_LOGREG:
        w, b = linear.fit_sgd_logreg(X, y, h.lr, h.l2, h.epochs, make_rng(seed), backend=backend)
        params = {"weights": w, "intercept": b}
    elif kind is ModelKind.LINEAR_SVM:
        w, b = linear.fit_linear_svm(X, y, h.l2, h.epochs)
        params = {"weights": w, "intercept": b}
    elif kind is ModelKind.RANDOM_FOREST:
        forest = trees.fit_random_forest(X, y, h.n_trees, h.max_depth, h.max_features, h.bootstrap,
                                         seed, backend=backend)
        params = {"trees": forest}
    elif kind is ModelKind.GRAD_BOOST:
        init, boosted = trees.fit_gradient_boosting(X, y, h.rounds, h.shrinkage, h.max_depth, backend=backend)
        params = {"init": init, "trees": boosted}
    elif kind is ModelKind.KNN:
        params = {"X": X.copy(), "y": y.copy(), "k": h.k, "metric": h.metric}
    else:
        means, variances, priors = neighbors.fit_gaussian_nb(X, y, h.var_smoothing)
        params = {"means": means, "variances": variances, "priors": priors}
    return TrainedModel(kind, params, tuple(data.feature_names))


def predict_scores(m: TrainedModel, X) -> np.ndarray:
    """Class-1 scores in [0, 1] for every row of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != m.n_features:
        raise InputError(f"expected {m.n_features} features, got {X.shape[1]}")
    P = m.params
    if m.kind in LINEAR_KINDS:
        return linear.sigmoid(X @ P["weights"] + P["intercept"])
    if m.kind is ModelKind.RANDOM_FOREST:
        return trees.forest_score(P["trees"], X)
    if m.kind is ModelKind.GRAD_BOOST:
        return trees.boosting_score(P["init"], P["trees"], X)
    if m.kind is ModelKind.KNN:
        return neighbors.knn_score(P["X"], P["y"], X, P["k"], P["metric"])
    return neighbors.gnb_score(P["means"], P["variances"], P["priors"], X)


def predict_labels(m: TrainedModel, X) -> np.ndarray:
    return (predict_scores(m, X) >= 0.5).astype(np.int8)


def predict(m: TrainedModel, x) -> tuple[int, float]:
    """Label and score for a single feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise InputError("predict expects one feature vector")
    score = float(predict_scores(m, x[None, :])[0])
    return int(score >= 0.5), score


def _normalized(raw: np.ndarray) -> np.ndarray:
    total = float(raw.sum())
    if total <= 0:
        # no signal at all (e.g. a forest of stumps that never split)
        return np.full(raw.shape, 1.0 / raw.size)
    return raw / total


def importance(m: TrainedModel) -> FeatureImportance | None:
    """Embedded feature importance, normalised to sum to 1; ``None`` for Knn and GaussianNB.

    Linear kinds use |weight|; forests sum Gini decreases over all splits;
    boosting sums squared-error reductions over all splits.
    """
    if m.kind in LINEAR_KINDS:
        return FeatureImportance(_normalized(np.abs(m.params["weights"])))
    if m.kind in (ModelKind.RANDOM_FOREST, ModelKind.GRAD_BOOST):
        raw = np.zeros(m.n_features)
        for tree in m.params["trees"]:
            raw += tree.feature_gains(m.n_features)
        return FeatureImportance(_normalized(raw))
    return None


def top_k(imp: FeatureImportance, k: int) -> list[int]:
    """Indices of the ``k`` largest weights; ties go to the lower index."""
    w = imp.weights
    if not 1 <= k <= w.size:
        raise InputError(f"k must lie in 1..{w.size}, got {k}")
    order = np.lexsort((np.arange(w.size), -w))
    return [int(i) for i in order[:k]]


# -- serialization ---------------------------------------------------------

def _encode(value):
    if isinstance(value, np.ndarray):
        return {"__array__": value.tolist(), "dtype": str(value.dtype)}
    if isinstance(value, Tree):
        return {"__tree__": value.to_dict()}
    if isinstance(value, list):
        return [_encode(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def _decode(value):
    if isinstance(value, dict) and "__array__" in value:
        return np.asarray(value["__array__"], dtype=value["dtype"])
    if isinstance(value, dict) and "__tree__" in value:
        return Tree.from_dict(value["__tree__"])
    if isinstance(value, list):
        return [_decode(v) for v in value]
    return value


def dumps(m: TrainedModel) -> str:
    """Versioned JSON; floats are written with shortest round-trip repr."""
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "kind": m.kind.value,
        "feature_names": list(m.feature_names),
        "params": {k: _encode(v) for k, v in m.params.items()},
    }
    return json.dumps(doc)


def loads(text: str) -> TrainedModel:
    doc = json.loads(text)
    if doc.get("format") != FORMAT_NAME:
        raise InputError("not a serialized hdsurvey model")
    if doc.get("version") != FORMAT_VERSION:
        raise InputError(f"unsupported model format version {doc.get('version')}")
    params = {k: _decode(v) for k, v in doc["params"].items()}
    return TrainedModel(ModelKind.parse(doc["kind"]), params, tuple(doc["feature_names"]))


def save(m: TrainedModel, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(m))


def load(path) -> TrainedModel:
    with open(path) as fh:
        return loads(fh.read())
