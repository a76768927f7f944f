"""Compiled kernels for CART growth, forest growth and tree traversal.

Randomness comes from a splitmix64 stream held in a one-element uint64 array,
so every tree is reproducible from its integer seed regardless of thread or
process layout.
"""
import numpy as np
from numba import njit

GINI = 0
ENTROPY = 1

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


@njit(cache=True)
def rng_next(state):
    state[0] += _GOLDEN
    z = state[0]
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


@njit(cache=True)
def rng_uniform(state):
    return float(rng_next(state) >> _S11) * _INV53


@njit(cache=True)
def rng_below(state, n):
    return np.int64(rng_next(state) % np.uint64(n))


@njit(cache=True)
def impurity(counts, total, criterion):
    if total <= 0:
        return 0.0
    acc = 0.0
    if criterion == GINI:
        for c in counts:
            p = c / total
            acc += p * p
        return 1.0 - acc
    for c in counts:
        if c > 0:
            p = c / total
            acc -= p * np.log2(p)
    return acc


@njit(cache=True)
def _grow(X, y, rows, n_classes, criterion, random_splitter, max_depth,
          min_split, min_leaf, k_features, state):
    """Grow one tree on ``X[rows]``; ``rows`` may repeat (bootstrap)."""
    n = rows.shape[0]
    d = X.shape[1]
    cap = max(2 * n - 1, 1)
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    node_imp = np.zeros(cap)
    n_node = np.zeros(cap, dtype=np.int64)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros((cap, n_classes))

    idx = rows.copy()
    buf = np.empty(n, dtype=np.int64)
    stack_node = np.empty(cap, dtype=np.int64)
    stack_start = np.empty(cap, dtype=np.int64)
    stack_end = np.empty(cap, dtype=np.int64)
    stack_depth = np.empty(cap, dtype=np.int64)
    sp = 0
    stack_node[0] = 0
    stack_start[0] = 0
    stack_end[0] = n
    stack_depth[0] = 0
    sp = 1
    count = 1

    perm = np.arange(d)
    counts = np.zeros(n_classes)
    lc = np.zeros(n_classes)
    rc = np.zeros(n_classes)

    while sp > 0:
        sp -= 1
        node = stack_node[sp]
        start = stack_start[sp]
        end = stack_end[sp]
        depth = stack_depth[sp]
        m = end - start

        counts[:] = 0.0
        for i in range(start, end):
            counts[y[idx[i]]] += 1.0
        imp = impurity(counts, m, criterion)
        value[node, :] = counts
        node_imp[node] = imp
        n_node[node] = m

        pure = False
        for c in range(n_classes):
            if counts[c] == m:
                pure = True
        if pure or depth >= max_depth or m < min_split or m < 2 * min_leaf or d == 0:
            continue

        # candidate features: partial Fisher-Yates, then ascending order
        for j in range(d):
            perm[j] = j
        for j in range(k_features):
            r = j + rng_below(state, d - j)
            tmp = perm[j]
            perm[j] = perm[r]
            perm[r] = tmp
        cand = np.sort(perm[:k_features])

        best_gain = -np.inf
        best_f = -1
        best_t = 0.0
        for f in cand:
            if random_splitter:
                lo = np.inf
                hi = -np.inf
                for i in range(start, end):
                    v = X[idx[i], f]
                    if v < lo:
                        lo = v
                    if v > hi:
                        hi = v
                if not hi > lo:
                    continue
                t = lo + rng_uniform(state) * (hi - lo)
                if t >= hi:
                    t = lo
                lc[:] = 0.0
                n_l = 0
                for i in range(start, end):
                    if X[idx[i], f] <= t:
                        lc[y[idx[i]]] += 1.0
                        n_l += 1
                n_r = m - n_l
                if n_l < min_leaf or n_r < min_leaf:
                    continue
                for c in range(n_classes):
                    rc[c] = counts[c] - lc[c]
                child = (n_l * impurity(lc, n_l, criterion) + n_r * impurity(rc, n_r, criterion)) / m
                gain = imp - child
                if gain > best_gain:
                    best_gain = gain
                    best_f = f
                    best_t = t
            else:
                vals = np.empty(m)
                for i in range(m):
                    vals[i] = X[idx[start + i], f]
                order = np.argsort(vals, kind="mergesort")
                lc[:] = 0.0
                for i in range(m - 1):
                    lc[y[idx[start + order[i]]]] += 1.0
                    a = vals[order[i]]
                    b = vals[order[i + 1]]
                    if not b > a:
                        continue
                    n_l = i + 1
                    n_r = m - n_l
                    if n_l < min_leaf:
                        continue
                    if n_r < min_leaf:
                        break
                    for c in range(n_classes):
                        rc[c] = counts[c] - lc[c]
                    child = (n_l * impurity(lc, n_l, criterion) + n_r * impurity(rc, n_r, criterion)) / m
                    gain = imp - child
                    if gain > best_gain:
                        t = a + (b - a) / 2.0
                        if t >= b:
                            t = a
                        best_gain = gain
                        best_f = f
                        best_t = t

        if best_f < 0:
            continue

        # stable partition: rows with x <= t first
        n_l = 0
        for i in range(start, end):
            if X[idx[i], best_f] <= best_t:
                buf[n_l] = idx[i]
                n_l += 1
        k = n_l
        for i in range(start, end):
            if not X[idx[i], best_f] <= best_t:
                buf[k] = idx[i]
                k += 1
        for i in range(m):
            idx[start + i] = buf[i]

        feature[node] = best_f
        threshold[node] = best_t
        lid = count
        rid = count + 1
        count += 2
        left[node] = lid
        right[node] = rid
        # push right first so the left subtree is grown first
        stack_node[sp] = rid
        stack_start[sp] = start + n_l
        stack_end[sp] = end
        stack_depth[sp] = depth + 1
        sp += 1
        stack_node[sp] = lid
        stack_start[sp] = start
        stack_end[sp] = start + n_l
        stack_depth[sp] = depth + 1
        sp += 1

    return (feature[:count].copy(), threshold[:count].copy(), node_imp[:count].copy(),
            n_node[:count].copy(), left[:count].copy(), right[:count].copy(), value[:count].copy())


@njit(cache=True)
def grow_tree(X, y, n_classes, criterion, random_splitter, max_depth,
              min_split, min_leaf, k_features, seed):
    state = np.empty(1, dtype=np.uint64)
    state[0] = np.uint64(seed)
    rows = np.arange(X.shape[0])
    return _grow(X, y, rows, n_classes, criterion, random_splitter, max_depth,
                 min_split, min_leaf, k_features, state)


@njit(cache=True)
def grow_forest(X, y, n_classes, criterion, max_depth, min_split, min_leaf,
                k_features, seeds):
    """Bootstrap-aggregated trees packed into flat arrays.

    Tree ``t`` owns nodes ``offsets[t]:offsets[t+1]``; child indices are local
    to the tree.
    """
    n = X.shape[0]
    n_trees = seeds.shape[0]
    cap = n_trees * max(2 * n - 1, 1)
    feature = np.empty(cap, dtype=np.int64)
    threshold = np.empty(cap)
    node_imp = np.empty(cap)
    n_node = np.empty(cap, dtype=np.int64)
    left = np.empty(cap, dtype=np.int64)
    right = np.empty(cap, dtype=np.int64)
    value = np.empty((cap, n_classes))
    offsets = np.zeros(n_trees + 1, dtype=np.int64)
    state = np.empty(1, dtype=np.uint64)
    rows = np.empty(n, dtype=np.int64)
    pos = 0
    for t in range(n_trees):
        state[0] = np.uint64(seeds[t])
        for i in range(n):
            rows[i] = rng_below(state, n)
        f, th, im, nn, le, ri, va = _grow(X, y, rows, n_classes, criterion, False,
                                          max_depth, min_split, min_leaf, k_features, state)
        c = f.shape[0]
        feature[pos:pos + c] = f
        threshold[pos:pos + c] = th
        node_imp[pos:pos + c] = im
        n_node[pos:pos + c] = nn
        left[pos:pos + c] = le
        right[pos:pos + c] = ri
        value[pos:pos + c] = va
        pos += c
        offsets[t + 1] = pos
    return (offsets, feature[:pos].copy(), threshold[:pos].copy(), node_imp[:pos].copy(),
            n_node[:pos].copy(), left[:pos].copy(), right[:pos].copy(), value[:pos].copy())


@njit(cache=True)
def apply_tree(X, feature, threshold, left, right, base):
    """Leaf index (global, ``base`` + local) reached by each row."""
    n = X.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        node = 0
        while feature[base + node] >= 0:
            if X[i, feature[base + node]] <= threshold[base + node]:
                node = left[base + node]
            else:
                node = right[base + node]
        out[i] = base + node
    return out


@njit(cache=True)
def forest_proba_prefixes(X, offsets, feature, threshold, left, right, value, prefixes):
    """Mean leaf class-frequency over the first ``p`` trees, for each ``p``
    in ascending ``prefixes``. Returns ``(len(prefixes), n, n_classes)``."""
    n = X.shape[0]
    k = value.shape[1]
    out = np.zeros((prefixes.shape[0], n, k))
    acc = np.zeros((n, k))
    j = 0
    n_trees = offsets.shape[0] - 1
    for t in range(n_trees):
        leaves = apply_tree(X, feature, threshold, left, right, offsets[t])
        for i in range(n):
            leaf = leaves[i]
            total = 0.0
            for c in range(k):
                total += value[leaf, c]
            for c in range(k):
                acc[i, c] += value[leaf, c] / total
        while j < prefixes.shape[0] and prefixes[j] == t + 1:
            out[j] = acc / (t + 1)
            j += 1
    return out
