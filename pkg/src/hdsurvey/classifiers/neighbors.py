"""k-nearest neighbours and Gaussian naive Bayes (no embedded importance)."""
from __future__ import annotations

import numpy as np

METRICS = ("euclidean", "manhattan")


def knn_score(train_X, train_y, X, k, metric="euclidean"):
    """Fraction of the ``k`` nearest training rows labelled 1.

    Distance ties go to the lower training-row index.
    """
    if metric not in METRICS:
        raise ValueError(f"unknown distance metric {metric!r}")
    n_train, p = train_X.shape
    k = min(k, n_train)
    train_y = np.asarray(train_y, dtype=np.float64)
    out = np.empty(X.shape[0])
    chunk = max(1, int(2e7 // max(1, n_train * p)))
    for start in range(0, X.shape[0], chunk):
        diff = X[start:start + chunk, None, :] - train_X[None, :, :]
        if metric == "euclidean":
            dist = np.einsum("ijk,ijk->ij", diff, diff)
        else:
            dist = np.abs(diff).sum(axis=2)
        kth = np.partition(dist, k - 1, axis=1)[:, k - 1]
        for i in range(dist.shape[0]):
            cand = np.flatnonzero(dist[i] <= kth[i])
            nearest = cand[np.argsort(dist[i, cand], kind="stable")[:k]]
            out[start + i] = train_y[nearest].mean()
    return out


def fit_gaussian_nb(X, y, var_smoothing):
    """Per-class means, variances and priors; variances get
    ``var_smoothing * max column variance`` added so they stay positive."""
    eps = var_smoothing * float(np.var(X, axis=0).max()) if X.shape[0] else 0.0
    if eps <= 0:
        eps = var_smoothing if var_smoothing > 0 else 1e-9
    means, variances, priors = [], [], []
    for cls in (0, 1):
        Xc = X[y == cls]
        means.append(Xc.mean(axis=0))
        variances.append(Xc.var(axis=0) + eps)
        priors.append(Xc.shape[0] / X.shape[0])
    return np.array(means), np.array(variances), np.array(priors)


def gnb_score(means, variances, priors, X):
    """Posterior probability of class 1."""
    jll = []
    for c in (0, 1):
        ll = -0.5 * np.sum(np.log(2.0 * np.pi * variances[c]))
        ll = ll - 0.5 * np.sum((X - means[c]) ** 2 / variances[c], axis=1)
        jll.append(np.log(priors[c]) + ll)
    # P(1|x) = 1 / (1 + exp(jll0 - jll1))
    d = jll[1] - jll[0]
    out = np.empty_like(d)
    pos = d >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-d[pos]))
    e = np.exp(d[~pos])
    out[~pos] = e / (1.0 + e)
    return out
