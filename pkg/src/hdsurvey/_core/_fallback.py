"""Pure numpy versions of the compiled kernels.

Both backends follow the same accumulation order so that tree structure is
identical whenever the inputs are; see ``_kernels.pyx``.
"""
import math

import numpy as np

GINI = 0
MSE = 1


def _impurity(S, W, criterion):
    # weighted node impurity (gini * W, or SSE minus the sum-of-squares term)
    if criterion == GINI:
        return 2.0 * S * (W - S) / W
    return -(S * S / W)


def _best_split(X, wt, w, idx, feats, min_leaf, criterion, S, W, min_gain):
    parent = _impurity(S, W, criterion)
    m = idx.shape[0]
    best_gain = min_gain
    best_feat = -1
    best_thr = 0.0
    pos = np.arange(1, m + 1)
    for f in feats:
        vals = X[idx, f]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        cs = np.cumsum(wt[idx[order]])
        cw = np.cumsum(w[idx[order]])
        sl = cs[:-1]
        wl = cw[:-1]
        sr = S - sl
        wr = W - wl
        ok = (sv[:-1] < sv[1:]) & (pos[:-1] >= min_leaf) & (m - pos[:-1] >= min_leaf)
        ok &= (wl > 0) & (wr > 0)
        if not ok.any():
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            gains = parent - _impurity(sl, wl, criterion) - _impurity(sr, wr, criterion)
        gains = np.where(ok, gains, -np.inf)
        j = int(np.argmax(gains))
        if gains[j] > best_gain:
            best_gain = float(gains[j])
            best_feat = int(f)
            thr = (sv[j] + sv[j + 1]) / 2.0
            if thr >= sv[j + 1]:
                thr = sv[j]
            best_thr = float(thr)
    return best_feat, best_thr, best_gain


def build_tree(X, target, weight, rows, keys, max_depth, max_features,
               min_samples_leaf, criterion, min_gain_frac, presorted=None):
    # ``presorted`` is a speed hint for the compiled kernel only
    X = np.ascontiguousarray(X, dtype=np.float64)
    wt = np.asarray(weight, dtype=np.float64) * np.asarray(target, dtype=np.float64)
    w = np.asarray(weight, dtype=np.float64)
    max_nodes = keys.shape[0]
    feature = np.full(max_nodes, -1, dtype=np.int64)
    threshold = np.zeros(max_nodes)
    left = np.full(max_nodes, -1, dtype=np.int64)
    right = np.full(max_nodes, -1, dtype=np.int64)
    value = np.zeros(max_nodes)
    gain = np.zeros(max_nodes)
    node_w = np.zeros(max_nodes)

    n_nodes = 1
    stack = [(0, np.asarray(rows, dtype=np.intp), 0)]
    while stack:
        node, idx, depth = stack.pop()
        S = float(np.cumsum(wt[idx])[-1]) if idx.size else 0.0
        W = float(np.cumsum(w[idx])[-1]) if idx.size else 0.0
        value[node] = S / W if W > 0 else 0.0
        node_w[node] = W
        if depth >= max_depth or idx.size < 2 * min_samples_leaf or W <= 0:
            continue
        if n_nodes + 2 > max_nodes:
            continue
        feats = np.argsort(keys[node], kind="stable")[:max_features]
        f, thr, g = _best_split(X, wt, w, idx, feats, min_samples_leaf,
                                criterion, S, W, min_gain_frac * W)
        if f < 0:
            continue
        go_left = X[idx, f] <= thr
        li, ri = n_nodes, n_nodes + 1
        n_nodes += 2
        feature[node], threshold[node], gain[node] = f, thr, g
        left[node], right[node] = li, ri
        stack.append((ri, idx[~go_left], depth + 1))
        stack.append((li, idx[go_left], depth + 1))

    return (feature[:n_nodes], threshold[:n_nodes], left[:n_nodes],
            right[:n_nodes], value[:n_nodes], gain[:n_nodes], node_w[:n_nodes])


def apply_tree(X, feature, threshold, left, right):
    X = np.asarray(X, dtype=np.float64)
    out = np.zeros(X.shape[0], dtype=np.int64)
    active = np.arange(X.shape[0])
    node = np.zeros(X.shape[0], dtype=np.int64)
    while active.size:
        f = feature[node[active]]
        leaf = f < 0
        out[active[leaf]] = node[active[leaf]]
        active = active[~leaf]
        if not active.size:
            break
        cur = node[active]
        go_left = X[active, feature[cur]] <= threshold[cur]
        node[active] = np.where(go_left, left[cur], right[cur])
    return out


def sgd_logreg_epoch(X, y, w, b, order, lr0, l2, t0):
    """One pass of per-sample SGD on the L2-regularised log-loss.

    Updates ``w`` in place; returns ``(b, t)`` with ``t`` the step counter.
    """
    t = t0
    # divergence shows up as non-finite weights, as in the compiled kernel;
    # the caller checks the loss after each epoch
    with np.errstate(over="ignore", invalid="ignore"):
        for i in order:
            t += 1
            lr = lr0 / math.sqrt(t)
            x = X[i]
            z = float(np.dot(w, x)) + b
            if z >= 0:
                p = 1.0 / (1.0 + math.exp(-z))
            else:
                e = math.exp(z)
                p = e / (1.0 + e)
            g = p - y[i]
            w -= lr * (g * x + l2 * w)
            b -= lr * g
    return b, t
