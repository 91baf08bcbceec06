"""Hot kernels: tree growing, tree traversal and per-sample SGD.

The compiled ``_kernels`` extension is used when it was built; otherwise the
numpy implementations in ``_fallback`` are used. Setting the environment
variable ``HDSURVEY_PURE_PYTHON=1`` forces the fallback.
"""
import os

import numpy as np

from . import _fallback

GINI = _fallback.GINI
MSE = _fallback.MSE

_compiled = None
if os.environ.get("HDSURVEY_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"


def get_backend(name=None):
    """Return the kernel module for ``name`` ("compiled", "python" or None for the default)."""
    if name is None:
        name = BACKEND
    if name == "python":
        return _fallback
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available; build the extension first")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def presort(X):
    """Per-feature row orders by (value, row index), shape (p, n)."""
    return np.ascontiguousarray(np.argsort(np.asarray(X), axis=0, kind="stable").T.astype(np.intp))


def build_tree(X, target, weight, rows, keys, max_depth, max_features,
               min_samples_leaf=1, criterion=GINI, min_gain_frac=1e-10, presorted=None, backend=None):
    """Grow one binary tree depth-first; returns the node arrays.

    ``rows`` selects the training rows (sorted here so ties resolve by row
    index), ``keys`` holds one row of random keys per potential node: the node
    scans the ``max_features`` features with the smallest keys.
    """
    rows = np.sort(np.asarray(rows, dtype=np.intp))
    keys = np.ascontiguousarray(keys, dtype=np.float64)
    return get_backend(backend).build_tree(
        X, target, weight, rows, keys, int(max_depth), int(max_features),
        int(min_samples_leaf), int(criterion), float(min_gain_frac), presorted)


def apply_tree(X, feature, threshold, left, right, backend=None):
    return get_backend(backend).apply_tree(X, feature, threshold, left, right)


def sgd_logreg_epoch(X, y, w, b, order, lr0, l2, t0, backend=None):
    mod = get_backend(backend)
    if mod is _fallback:
        return mod.sgd_logreg_epoch(np.asarray(X, dtype=np.float64), np.asarray(y, dtype=np.float64),
                                    w, b, order, lr0, l2, t0)
    return mod.sgd_logreg_epoch(X, y, w, b, order, lr0, l2, t0)
