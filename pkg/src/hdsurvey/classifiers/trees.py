"""Tree ensembles: a Gini random forest and log-loss gradient boosting."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import _core
from .linear import sigmoid


@dataclass
class Tree:
    feature: np.ndarray    # split feature per node, -1 at leaves
    threshold: np.ndarray  # go left when x[feature] <= threshold
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray      # leaf output
    gain: np.ndarray       # impurity decrease of each split, 0 at leaves

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    def apply(self, X, backend=None):
        return _core.apply_tree(X, self.feature, self.threshold, self.left, self.right, backend=backend)

    def predict(self, X, backend=None):
        return self.value[self.apply(X, backend=backend)]

    def feature_gains(self, n_features: int) -> np.ndarray:
        split = self.feature >= 0
        return np.bincount(self.feature[split], weights=self.gain[split], minlength=n_features)

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in ("feature", "threshold", "left", "right", "value", "gain")}

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        ints = ("feature", "left", "right")
        return cls(**{k: np.asarray(d[k], dtype=np.int64 if k in ints else np.float64)
                      for k in ("feature", "threshold", "left", "right", "value", "gain")})


def _max_nodes(depth: int) -> int:
    return 2 ** (depth + 1) - 1


def grow_tree(X, target, weight, rows, keys, max_depth, max_features, criterion,
              min_samples_leaf=1, presorted=None, backend=None) -> Tree:
    feature, threshold, left, right, value, gain, _ = _core.build_tree(
        X, target, weight, rows, keys, max_depth, max_features,
        min_samples_leaf=min_samples_leaf, criterion=criterion, presorted=presorted, backend=backend)
    return Tree(feature, threshold, left, right, value, gain)


def default_max_features(n_features: int) -> int:
    return max(1, math.ceil(math.sqrt(n_features)))


def fit_random_forest(X, y, n_trees, max_depth, max_features, bootstrap, seed,
                      min_samples_leaf=1, backend=None) -> list[Tree]:
    """Each tree draws its bootstrap counts and node feature keys from its own
    child seed, so trees do not depend on build order."""
    n, p = X.shape
    mf = default_max_features(p) if max_features is None else int(max_features)
    yf = np.asarray(y, dtype=np.float64)
    children = np.random.SeedSequence(int(seed)).spawn(n_trees)
    presorted = _core.presort(X)
    trees = []
    for child in children:
        rng = np.random.Generator(np.random.PCG64(child))
        if bootstrap:
            weight = np.bincount(rng.integers(0, n, size=n), minlength=n).astype(np.float64)
        else:
            weight = np.ones(n)
        keys = rng.random((_max_nodes(max_depth), p))
        rows = np.flatnonzero(weight > 0)
        trees.append(grow_tree(X, yf, weight, rows, keys, max_depth, mf, _core.GINI,
                               min_samples_leaf, presorted, backend))
    return trees


def forest_score(trees: list[Tree], X, backend=None) -> np.ndarray:
    """Fraction of trees voting for class 1."""
    votes = np.zeros(X.shape[0])
    for tree in trees:
        votes += tree.predict(X, backend=backend) >= 0.5
    return votes / len(trees)


def fit_gradient_boosting(X, y, rounds, shrinkage, max_depth, min_samples_leaf=1,
                          backend=None) -> tuple[float, list[Tree]]:
    """Log-loss boosting: each round fits a squared-error tree to the
    residuals ``y - p``; leaves take the Newton step sum(r) / sum(p(1-p))."""
    n, p = X.shape
    yf = np.asarray(y, dtype=np.float64)
    prior = float(np.clip(yf.mean(), 1e-12, 1 - 1e-12))
    init = math.log(prior / (1.0 - prior))
    F = np.full(n, init)
    weight = np.ones(n)
    rows = np.arange(n)
    # all features scanned in index order at every node
    keys = np.zeros((_max_nodes(max_depth), p))
    presorted = _core.presort(X)
    trees = []
    for _ in range(rounds):
        prob = sigmoid(F)
        resid = yf - prob
        tree = grow_tree(X, resid, weight, rows, keys, max_depth, p, _core.MSE, min_samples_leaf,
                         presorted, backend)
        leaf = tree.apply(X, backend=backend)
        num = np.bincount(leaf, weights=resid, minlength=tree.n_nodes)
        den = np.bincount(leaf, weights=prob * (1.0 - prob), minlength=tree.n_nodes)
        value = np.where(den > 1e-12, num / np.maximum(den, 1e-12), 0.0)
        tree.value = np.where(tree.feature < 0, shrinkage * value, 0.0)
        F = F + tree.value[leaf]
        trees.append(tree)
    return init, trees


def boosting_score(init: float, trees: list[Tree], X, backend=None) -> np.ndarray:
    F = np.full(X.shape[0], init)
    for tree in trees:
        F += tree.predict(X, backend=backend)
    return sigmoid(F)
