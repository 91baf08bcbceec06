# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled tree-growing and SGD kernels.

Mirrors ``_fallback.py`` operation for operation (same scan order, same
sequential accumulation, same tie rules), so both backends grow identical
trees from identical inputs.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt
from libc.stdlib cimport malloc, free, qsort

cnp.import_array()

ctypedef cnp.float64_t f64
ctypedef cnp.intp_t intp

cdef struct Pair:
    double v
    intp i

cdef int _cmp_pair(const void* a, const void* b) noexcept nogil:
    cdef Pair* pa = <Pair*> a
    cdef Pair* pb = <Pair*> b
    if pa.v < pb.v:
        return -1
    if pa.v > pb.v:
        return 1
    if pa.i < pb.i:
        return -1
    if pa.i > pb.i:
        return 1
    return 0

cdef inline double _impurity(double S, double W, int criterion) noexcept nogil:
    if criterion == 0:
        return 2.0 * S * (W - S) / W
    return -(S * S / W)


def build_tree(X, target, weight, rows, keys, int max_depth, int max_features,
               int min_samples_leaf, int criterion, double min_gain_frac, presorted=None):
    cdef const f64[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef f64[::1] w = np.ascontiguousarray(weight, dtype=np.float64)
    cdef f64[::1] wt = np.ascontiguousarray(
        np.asarray(weight, dtype=np.float64) * np.asarray(target, dtype=np.float64))
    cdef const f64[:, ::1] kv = np.ascontiguousarray(keys, dtype=np.float64)
    cdef intp[::1] r = np.array(rows, dtype=np.intp, copy=True)
    cdef intp[::1] tmp = np.empty(r.shape[0], dtype=np.intp)
    cdef intp p = Xv.shape[1]
    cdef intp max_nodes = kv.shape[0]
    cdef intp m_all = r.shape[0]
    cdef intp n_total = Xv.shape[0]
    # presorted[f] lists every row of X ordered by (value, row); filtering it by
    # node membership yields the same order as sorting the node's rows
    cdef bint use_pre = presorted is not None
    cdef const intp[:, ::1] pre
    if use_pre:
        pre = np.ascontiguousarray(presorted, dtype=np.intp)
    else:
        pre = np.zeros((1, 1), dtype=np.intp)
    cdef cnp.int64_t[::1] mark = np.full(n_total, -1, dtype=np.int64)

    feature_a = np.full(max_nodes, -1, dtype=np.int64)
    threshold_a = np.zeros(max_nodes)
    left_a = np.full(max_nodes, -1, dtype=np.int64)
    right_a = np.full(max_nodes, -1, dtype=np.int64)
    value_a = np.zeros(max_nodes)
    gain_a = np.zeros(max_nodes)
    nodew_a = np.zeros(max_nodes)
    cdef cnp.int64_t[::1] feature = feature_a
    cdef f64[::1] threshold = threshold_a
    cdef cnp.int64_t[::1] left = left_a
    cdef cnp.int64_t[::1] right = right_a
    cdef f64[::1] value = value_a
    cdef f64[::1] gain = gain_a
    cdef f64[::1] nodew = nodew_a

    # explicit DFS stack: node id, start, end, depth
    cdef intp* st_node = <intp*> malloc(max_nodes * sizeof(intp))
    cdef intp* st_start = <intp*> malloc(max_nodes * sizeof(intp))
    cdef intp* st_end = <intp*> malloc(max_nodes * sizeof(intp))
    cdef intp* st_depth = <intp*> malloc(max_nodes * sizeof(intp))
    cdef Pair* pairs = <Pair*> malloc((m_all + 1) * sizeof(Pair))
    cdef intp* feats = <intp*> malloc(p * sizeof(intp))
    if not st_node or not st_start or not st_end or not st_depth or not pairs or not feats:
        raise MemoryError()

    cdef intp top = 0, n_nodes = 1
    cdef intp node, start, end, depth, m, k, j, f, fi, ii, nl, a, b
    cdef double S, W, parent, sl, wl, sr, wr, g, best_gain, best_thr, thr
    cdef intp best_feat
    cdef intp mf

    st_node[0] = 0
    st_start[0] = 0
    st_end[0] = m_all
    st_depth[0] = 0
    top = 1
    try:
        with nogil:
            while top > 0:
                top -= 1
                node = st_node[top]
                start = st_start[top]
                end = st_end[top]
                depth = st_depth[top]
                m = end - start
                S = 0.0
                W = 0.0
                for k in range(start, end):
                    S += wt[r[k]]
                    W += w[r[k]]
                value[node] = S / W if W > 0 else 0.0
                nodew[node] = W
                if depth >= max_depth or m < 2 * min_samples_leaf or W <= 0:
                    continue
                if n_nodes + 2 > max_nodes:
                    continue

                # feature scan order: stable sort of this node's random keys
                for j in range(p):
                    feats[j] = j
                for j in range(1, p):
                    fi = feats[j]
                    k = j - 1
                    while k >= 0 and kv[node, feats[k]] > kv[node, fi]:
                        feats[k + 1] = feats[k]
                        k -= 1
                    feats[k + 1] = fi
                mf = max_features if max_features < p else p

                parent = _impurity(S, W, criterion)
                best_gain = min_gain_frac * W
                best_feat = -1
                best_thr = 0.0
                if use_pre and n_total < 8 * m:
                    for k in range(start, end):
                        mark[r[k]] = node
                for j in range(mf):
                    f = feats[j]
                    if use_pre and n_total < 8 * m:
                        a = 0
                        for k in range(n_total):
                            ii = pre[f, k]
                            if mark[ii] == node:
                                pairs[a].v = Xv[ii, f]
                                pairs[a].i = ii
                                a += 1
                    else:
                        for k in range(m):
                            pairs[k].v = Xv[r[start + k], f]
                            pairs[k].i = r[start + k]
                        qsort(pairs, m, sizeof(Pair), _cmp_pair)
                    sl = 0.0
                    wl = 0.0
                    for k in range(m - 1):
                        sl += wt[pairs[k].i]
                        wl += w[pairs[k].i]
                        if not (pairs[k].v < pairs[k + 1].v):
                            continue
                        if k + 1 < min_samples_leaf or m - (k + 1) < min_samples_leaf:
                            continue
                        sr = S - sl
                        wr = W - wl
                        if not (wl > 0 and wr > 0):
                            continue
                        g = parent - _impurity(sl, wl, criterion) - _impurity(sr, wr, criterion)
                        if g > best_gain:
                            best_gain = g
                            best_feat = f
                            thr = (pairs[k].v + pairs[k + 1].v) / 2.0
                            if thr >= pairs[k + 1].v:
                                thr = pairs[k].v
                            best_thr = thr
                if best_feat < 0:
                    continue

                # stable partition keeps ascending row order on both sides
                a = 0
                b = 0
                for k in range(start, end):
                    if Xv[r[k], best_feat] <= best_thr:
                        a += 1
                nl = a
                a = 0
                for k in range(start, end):
                    ii = r[k]
                    if Xv[ii, best_feat] <= best_thr:
                        tmp[start + a] = ii
                        a += 1
                    else:
                        tmp[start + nl + b] = ii
                        b += 1
                for k in range(start, end):
                    r[k] = tmp[k]

                feature[node] = best_feat
                threshold[node] = best_thr
                gain[node] = best_gain
                left[node] = n_nodes
                right[node] = n_nodes + 1
                # right pushed first so the left subtree is grown first
                st_node[top] = n_nodes + 1
                st_start[top] = start + nl
                st_end[top] = end
                st_depth[top] = depth + 1
                top += 1
                st_node[top] = n_nodes
                st_start[top] = start
                st_end[top] = start + nl
                st_depth[top] = depth + 1
                top += 1
                n_nodes += 2
    finally:
        free(st_node)
        free(st_start)
        free(st_end)
        free(st_depth)
        free(pairs)
        free(feats)

    return (feature_a[:n_nodes], threshold_a[:n_nodes], left_a[:n_nodes],
            right_a[:n_nodes], value_a[:n_nodes], gain_a[:n_nodes], nodew_a[:n_nodes])


def apply_tree(X, feature, threshold, left, right):
    cdef const f64[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const cnp.int64_t[::1] fe = np.ascontiguousarray(feature, dtype=np.int64)
    cdef const f64[::1] th = np.ascontiguousarray(threshold, dtype=np.float64)
    cdef const cnp.int64_t[::1] le = np.ascontiguousarray(left, dtype=np.int64)
    cdef const cnp.int64_t[::1] ri = np.ascontiguousarray(right, dtype=np.int64)
    out_a = np.zeros(Xv.shape[0], dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_a
    cdef intp i, node
    with nogil:
        for i in range(Xv.shape[0]):
            node = 0
            while fe[node] >= 0:
                if Xv[i, fe[node]] <= th[node]:
                    node = le[node]
                else:
                    node = ri[node]
            out[i] = node
    return out_a


def sgd_logreg_epoch(X, y, f64[::1] w, double b, order, double lr0, double l2,
                     cnp.int64_t t0):
    """One pass of per-sample SGD on the L2-regularised log-loss.

    Updates ``w`` in place; returns ``(b, t)`` with ``t`` the step counter.
    """
    cdef const f64[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const f64[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef const intp[::1] ord_ = np.ascontiguousarray(order, dtype=np.intp)
    cdef intp p = Xv.shape[1]
    cdef intp n = ord_.shape[0]
    cdef intp s, i, j
    cdef cnp.int64_t t = t0
    cdef double lr, z, pr, e, g
    with nogil:
        for s in range(n):
            i = ord_[s]
            t += 1
            lr = lr0 / sqrt(<double> t)
            z = 0.0
            for j in range(p):
                z += w[j] * Xv[i, j]
            z += b
            if z >= 0:
                pr = 1.0 / (1.0 + exp(-z))
            else:
                e = exp(z)
                pr = e / (1.0 + e)
            g = pr - yv[i]
            for j in range(p):
                w[j] -= lr * (g * Xv[i, j] + l2 * w[j])
            b -= lr * g
    return b, t
