"""Compiled kernels for growing and evaluating Gini CART trees.

Trees are flat arrays: ``feature[node]`` is -1 for leaves, children live at
``left[node]`` / ``right[node]``, and every node keeps its positive and
negative training counts. Randomness comes from a splitmix64 state owned by
the caller, so a tree depends only on its seed.
"""
import numba as nb
import numpy as np

_U64 = nb.uint64


@nb.njit(cache=True)
def _next(state):
    state[0] += _U64(0x9E3779B97F4A7C15)
    z = state[0]
    z = (z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)
    return z ^ (z >> _U64(31))


@nb.njit(cache=True)
def _below(state, n):
    # Lemire-free modulo draw; n is tiny (feature count) so the bias is negligible
    return np.int64(_next(state) % _U64(n))


@nb.njit(cache=True)
def _best_split(X, y, idx, start, end, f, vals, order):
    """Best midpoint threshold on feature f for rows idx[start:end].

    Returns (weighted child gini * n, threshold); the score is +inf when the
    feature is constant on the node.
    """
    m = end - start
    for i in range(m):
        vals[i] = X[idx[start + i], f]
    o = np.argsort(vals[:m], kind="mergesort")
    for i in range(m):
        order[i] = o[i]
    total_pos = 0
    for i in range(m):
        total_pos += y[idx[start + i]]
    best = np.inf
    best_thr = 0.0
    left_pos = 0
    for i in range(m - 1):
        left_pos += y[idx[start + order[i]]]
        a = vals[order[i]]
        b = vals[order[i + 1]]
        if not a < b:
            continue
        nl = i + 1
        nr = m - nl
        rp = total_pos - left_pos
        # n * weighted gini = nl - (pl^2 + ql^2)/nl + nr - (pr^2 + qr^2)/nr
        ql = nl - left_pos
        qr = nr - rp
        score = (nl - (left_pos * left_pos + ql * ql) / nl) + (nr - (rp * rp + qr * qr) / nr)
        if score < best:
            best = score
            thr = a + (b - a) / 2.0
            if thr >= b:
                thr = a
            best_thr = thr
    return best, best_thr


@nb.njit(cache=True, nogil=True)
def grow(X, y, max_features, seed):
    """Grow one unpruned tree on (X, y), y in {0, 1}.

    At each impure node features are visited in a fresh random order until
    ``max_features`` non-constant ones have been scored (constant features
    do not count, as in the usual CART implementations); the lowest score
    wins, ties going to the lower feature index and then the lower threshold.
    """
    n, d = X.shape
    state = np.empty(1, dtype=np.uint64)
    state[0] = _U64(seed)
    cap = 2 * n + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    pos = np.zeros(cap, dtype=np.int64)
    neg = np.zeros(cap, dtype=np.int64)
    idx = np.arange(n)
    vals = np.empty(n, dtype=np.float64)
    order = np.empty(n, dtype=np.int64)
    perm = np.arange(d)
    # stack of (node, start, end)
    stack = np.empty((cap, 3), dtype=np.int64)
    sp = 0
    stack[sp, 0] = 0
    stack[sp, 1] = 0
    stack[sp, 2] = n
    sp += 1
    n_nodes = 1
    while sp > 0:
        sp -= 1
        node = stack[sp, 0]
        start = stack[sp, 1]
        end = stack[sp, 2]
        p = 0
        for i in range(start, end):
            p += y[idx[i]]
        pos[node] = p
        neg[node] = (end - start) - p
        if end - start < 2 or p == 0 or p == end - start:
            continue
        for i in range(d):
            perm[i] = i
        best = np.inf
        best_f = -1
        best_thr = 0.0
        visited = 0
        remaining = d
        while remaining > 0 and visited < max_features:
            j = _below(state, remaining)
            f = perm[j]
            perm[j] = perm[remaining - 1]
            perm[remaining - 1] = f
            remaining -= 1
            score, thr = _best_split(X, y, idx, start, end, f, vals, order)
            if score == np.inf:
                continue
            visited += 1
            if score < best or (score == best and (f < best_f or (f == best_f and thr < best_thr))):
                best = score
                best_f = f
                best_thr = thr
        if best_f < 0:
            continue
        # partition idx[start:end] by X[:, best_f] <= best_thr, stable
        nl = 0
        for i in range(start, end):
            r = idx[i]
            if X[r, best_f] <= best_thr:
                order[nl] = r
                nl += 1
        k = nl
        for i in range(start, end):
            r = idx[i]
            if not X[r, best_f] <= best_thr:
                order[k] = r
                k += 1
        for i in range(end - start):
            idx[start + i] = order[i]
        feature[node] = best_f
        threshold[node] = best_thr
        lc = n_nodes
        rc = n_nodes + 1
        n_nodes += 2
        left[node] = lc
        right[node] = rc
        stack[sp, 0] = rc
        stack[sp, 1] = start + nl
        stack[sp, 2] = end
        sp += 1
        stack[sp, 0] = lc
        stack[sp, 1] = start
        stack[sp, 2] = start + nl
        sp += 1
    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), pos[:n_nodes].copy(), neg[:n_nodes].copy())


@nb.njit(cache=True, nogil=True)
def leaf_votes(X, feature, threshold, left, right, pos, neg):
    """1 where the reached leaf has pos >= neg (ties vote positive), else 0."""
    m = X.shape[0]
    out = np.empty(m, dtype=np.int8)
    for i in range(m):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = 1 if pos[node] >= neg[node] else 0
    return out
