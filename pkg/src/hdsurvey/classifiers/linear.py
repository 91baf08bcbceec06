"""Linear classifiers: full-batch logistic regression, per-sample SGD logistic
regression and a Pegasos-style linear SVM."""
from __future__ import annotations

import math

import numpy as np

from .. import _core
from ..errors import TrainingError


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def logloss_objective(w, b, X, y, l2):
    """Mean log-loss plus ``l2/2 * ||w||^2`` and its gradient ``(loss, grad_w, grad_b)``.

    With a single row this is exactly the per-sample objective SGD descends.
    """
    with np.errstate(over="ignore", invalid="ignore"):  # divergence is reported by the caller
        z = X @ w + b
        # log(1 + e^z) - y z, evaluated stably
        loss = float(np.mean(np.logaddexp(0.0, z) - y * z)) + 0.5 * l2 * float(w @ w)
    r = sigmoid(z) - y
    grad_w = X.T @ r / X.shape[0] + l2 * w
    grad_b = float(np.mean(r))
    return loss, grad_w, grad_b


def fit_logreg(X, y, lr, l2, epochs, tol):
    n, p = X.shape
    w = np.zeros(p)
    b = 0.0
    for epoch in range(1, epochs + 1):
        loss, gw, gb = logloss_objective(w, b, X, y, l2)
        if not math.isfinite(loss):
            raise TrainingError(f"LogReg: non-finite loss at epoch {epoch}")
        if max(float(np.max(np.abs(gw))), abs(gb)) < tol:
            break
        w -= lr * gw
        b -= lr * gb
    return w, b


def fit_sgd_logreg(X, y, lr, l2, epochs, rng, backend=None):
    """Per-sample SGD with step ``lr / sqrt(t)``, ``t`` counting every update."""
    n, p = X.shape
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    w = np.zeros(p)
    b = 0.0
    t = 0
    for epoch in range(1, epochs + 1):
        order = rng.permutation(n).astype(np.intp)
        b, t = _core.sgd_logreg_epoch(X, y, w, b, order, lr, l2, t, backend=backend)
        loss, _, _ = logloss_objective(w, b, X, y, l2)
        if not math.isfinite(loss):
            raise TrainingError(f"SgdLogReg: non-finite loss at epoch {epoch}")
    return w, float(b)


def hinge_objective(w, b, X, y, l2):
    """``l2/2 * ||(w, b)||^2 + mean hinge`` with labels mapped to +-1."""
    s = 2.0 * y - 1.0
    margin = s * (X @ w + b)
    return 0.5 * l2 * (float(w @ w) + b * b) + float(np.mean(np.maximum(0.0, 1.0 - margin)))


def fit_linear_svm(X, y, l2, epochs):
    """Full-batch Pegasos: step ``1/(l2 t)`` then projection onto the
    ``1/sqrt(l2)`` ball. The bias is carried as a constant feature (and so
    regularised). Returns the average of the second half of the iterates."""
    n, p = X.shape
    Xa = np.hstack([X, np.ones((n, 1))])
    s = 2.0 * y - 1.0
    theta = np.zeros(p + 1)
    avg = np.zeros(p + 1)
    n_avg = 0
    radius = 1.0 / math.sqrt(l2)
    start_avg = epochs // 2
    for t in range(1, epochs + 1):
        active = s * (Xa @ theta) < 1.0
        grad = l2 * theta - (s[active] @ Xa[active]) / n
        theta = theta - grad / (l2 * t)
        norm = float(np.linalg.norm(theta))
        if norm > radius:
            theta *= radius / norm
        if not np.all(np.isfinite(theta)):
            raise TrainingError(f"LinearSVM: non-finite weights at epoch {t}")
        if t > start_avg:
            n_avg += 1
            avg += (theta - avg) / n_avg
    return avg[:p].copy(), float(avg[p])
