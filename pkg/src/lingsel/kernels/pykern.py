"""Pure numpy implementations of the hot kernels.

This is the fallback backend; `lingsel._ckern` implements the same contract
in C. The two must agree bit for bit on isolation-forest construction and
scoring and on the SMO iteration sequence, so every floating-point expression
here is written in the exact evaluation order the C code uses (no fused
multiply-adds, same reduction order, same tie-breaking).
"""

import numpy as np

from ..numcore import SplitMix64

NAME = "python"


def iforest_build(data, psi, seed, height_limit):
    """Grow one isolation tree on a seeded subsample of `data`.

    Draw order from the seed stream is pinned: psi subsample draws (partial
    Fisher-Yates over row indices), then per internal node up to d dimension
    draws (re-draw on constant columns, give up after d) followed by one
    split draw. Nodes are allocated preorder, left subtree first.

    Returns (split_dim, split_val, left, right, size) arrays; leaves have
    split_dim == -1. `size` is the number of subsample points at the node.
    """
    data = np.ascontiguousarray(data, dtype=np.float64)
    n, d = data.shape
    rng = SplitMix64(seed)
    limit = min(psi, n)
    pool = list(range(n))
    for i in range(limit):
        j = i + rng.next_below(n - i)
        pool[i], pool[j] = pool[j], pool[i]
    sample = np.asarray(pool[:limit], dtype=np.intp)

    split_dim = []
    split_val = []
    left = []
    right = []
    size = []

    def build(idx, depth):
        node = len(split_dim)
        split_dim.append(-1)
        split_val.append(0.0)
        left.append(-1)
        right.append(-1)
        size.append(len(idx))
        if len(idx) <= 1 or depth >= height_limit:
            return node
        dim = -1
        col = None
        lo = hi = 0.0
        for _ in range(d):
            cand = rng.next_below(d)
            c = data[idx, cand]
            clo = float(c.min())
            chi = float(c.max())
            if clo < chi:
                dim, col, lo, hi = cand, c, clo, chi
                break
        if dim < 0:
            return node
        u = rng.next_uniform()
        sv = lo + u * (hi - lo)
        mask = col < sv
        split_dim[node] = dim
        split_val[node] = sv
        l_child = build(idx[mask], depth + 1)
        r_child = build(idx[~mask], depth + 1)
        left[node] = l_child
        right[node] = r_child
        return node

    build(sample, 0)
    return (
        np.asarray(split_dim, dtype=np.int32),
        np.asarray(split_val, dtype=np.float64),
        np.asarray(left, dtype=np.int32),
        np.asarray(right, dtype=np.int32),
        np.asarray(size, dtype=np.int32),
    )


def iforest_path_sums(split_dim, split_val, left, right, size, offsets, queries, c_table):
    """Sum over trees of (leaf depth + c_table[leaf size]) for each query.

    Tree t occupies rows offsets[t]:offsets[t+1] of the flattened node
    arrays. Contributions are accumulated in tree order so the result is
    bit-identical across backends and thread counts.
    """
    queries = np.ascontiguousarray(queries, dtype=np.float64)
    m = queries.shape[0]
    sums = np.zeros(m, dtype=np.float64)
    n_trees = len(offsets) - 1
    rows = np.arange(m)
    for t in range(n_trees):
        base = offsets[t]
        sd = split_dim[base:offsets[t + 1]]
        sv = split_val[base:offsets[t + 1]]
        lc = left[base:offsets[t + 1]]
        rc = right[base:offsets[t + 1]]
        sz = size[base:offsets[t + 1]]
        node = np.zeros(m, dtype=np.int64)
        depth = np.zeros(m, dtype=np.float64)
        alive = rows[sd[node] >= 0]
        while alive.size:
            cur = node[alive]
            go_left = queries[alive, sd[cur]] < sv[cur]
            node[alive] = np.where(go_left, lc[cur], rc[cur])
            depth[alive] += 1.0
            alive = alive[sd[node[alive]] >= 0]
        sums += depth + c_table[sz[node]]
    return sums


def smo_solve(K, alpha, grad, upper, tol, max_iter):
    """Two-coordinate descent on the box-constrained dual with Σα fixed.

    Each iteration moves mass from the feasible coordinate with the largest
    gradient to the one with the smallest; converged when that gap is at most
    `tol` (or no feasible pair remains). `alpha` and `grad` (= K @ alpha) are
    updated in place. Returns (iterations, converged).
    """
    K = np.ascontiguousarray(K, dtype=np.float64)
    n = alpha.shape[0]
    neg_inf = -np.inf
    pos_inf = np.inf
    for it in range(max_iter):
        gi_cand = np.where(alpha > 0.0, grad, neg_inf)
        i = int(np.argmax(gi_cand))
        gj_cand = np.where(alpha < upper, grad, pos_inf)
        j = int(np.argmin(gj_cand))
        gmax = gi_cand[i]
        gmin = gj_cand[j]
        if gmax == neg_inf or gmin == pos_inf:
            return it, True
        if gmax - gmin <= tol:
            return it, True
        quad = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if quad <= 0.0:
            quad = 1e-12
        step = (gmax - gmin) / quad
        bound_i = alpha[i]
        bound_j = upper - alpha[j]
        if step > bound_i:
            step = bound_i
        if step > bound_j:
            step = bound_j
        new_ai = alpha[i] - step
        new_aj = alpha[j] + step
        if step == bound_i:
            new_ai = 0.0
        if step == bound_j:
            new_aj = upper
        alpha[i] = new_ai
        alpha[j] = new_aj
        grad += step * (K[j] - K[i])
    return max_iter, False
