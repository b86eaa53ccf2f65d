# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
# cython: language_level=3
"""Compiled implementations of the hot kernels.

Contract and semantics are defined by `lingsel.kernels.pykern`; this module
must match it bit for bit (same RNG consumption, same tie-breaking, same
floating-point evaluation order — the build disables fp contraction so no
multiply-adds get fused).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY
from libc.stdint cimport int32_t, int64_t, uint64_t

cnp.import_array()

NAME = "compiled"

cdef uint64_t _GOLDEN = 0x9E3779B97F4A7C15
cdef uint64_t _MIX1 = 0xBF58476D1CE4E5B9
cdef uint64_t _MIX2 = 0x94D049BB133111EB
# 2^-53 written as an exact reciprocal
cdef double _U53 = 1.0 / 9007199254740992.0


cdef inline uint64_t _mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * _MIX1
    z = (z ^ (z >> 27)) * _MIX2
    return z ^ (z >> 31)


cdef inline double _next_uniform(uint64_t* state) noexcept nogil:
    state[0] = state[0] + _GOLDEN
    return <double>(_mix64(state[0]) >> 11) * _U53


cdef Py_ssize_t _tree_build(double[:, ::1] data, int64_t* idx, Py_ssize_t count,
                            int depth, int height_limit, uint64_t* state,
                            int32_t* sdim, double* sval, int32_t* lch,
                            int32_t* rch, int32_t* sz, Py_ssize_t* n_nodes,
                            int64_t* scratch, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t node = n_nodes[0]
    cdef Py_ssize_t attempt, cand, t, nl, nr, lnode, rnode
    cdef Py_ssize_t dim = -1
    cdef double lo = 0.0, hi = 0.0, v, u, split

    n_nodes[0] += 1
    sdim[node] = -1
    sval[node] = 0.0
    lch[node] = -1
    rch[node] = -1
    sz[node] = <int32_t>count
    if count <= 1 or depth >= height_limit:
        return node
    for attempt in range(d):
        cand = <Py_ssize_t>(_next_uniform(state) * d)
        lo = data[idx[0], cand]
        hi = lo
        for t in range(1, count):
            v = data[idx[t], cand]
            if v < lo:
                lo = v
            elif v > hi:
                hi = v
        if lo < hi:
            dim = cand
            break
    if dim < 0:
        return node
    u = _next_uniform(state)
    split = lo + u * (hi - lo)
    nl = 0
    nr = 0
    for t in range(count):
        if data[idx[t], dim] < split:
            idx[nl] = idx[t]
            nl += 1
        else:
            scratch[nr] = idx[t]
            nr += 1
    for t in range(nr):
        idx[nl + t] = scratch[t]
    sdim[node] = <int32_t>dim
    sval[node] = split
    lnode = _tree_build(data, idx, nl, depth + 1, height_limit, state,
                        sdim, sval, lch, rch, sz, n_nodes, scratch, d)
    rnode = _tree_build(data, idx + nl, count - nl, depth + 1, height_limit,
                        state, sdim, sval, lch, rch, sz, n_nodes, scratch, d)
    lch[node] = <int32_t>lnode
    rch[node] = <int32_t>rnode
    return node


def iforest_build(data, Py_ssize_t psi, seed, int height_limit):
    """Grow one isolation tree; see pykern.iforest_build for the contract."""
    cdef double[:, ::1] dv = np.ascontiguousarray(data, dtype=np.float64)
    cdef Py_ssize_t n = dv.shape[0]
    cdef Py_ssize_t d = dv.shape[1]
    cdef uint64_t state = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef Py_ssize_t limit = psi if psi < n else n
    cdef Py_ssize_t i, j
    cdef int64_t tmp

    pool = np.arange(n, dtype=np.int64)
    cdef int64_t[::1] poolv = pool
    for i in range(limit):
        j = i + <Py_ssize_t>(_next_uniform(&state) * (n - i))
        tmp = poolv[i]
        poolv[i] = poolv[j]
        poolv[j] = tmp

    # Proven node-count bound: at most limit live nodes per level over
    # height_limit+1 levels, each internal adding at most one empty leaf.
    cdef Py_ssize_t cap = 2 * limit * (height_limit + 1) + 8
    split_dim = np.empty(cap, dtype=np.int32)
    split_val = np.empty(cap, dtype=np.float64)
    left = np.empty(cap, dtype=np.int32)
    right = np.empty(cap, dtype=np.int32)
    size = np.empty(cap, dtype=np.int32)
    idx = np.ascontiguousarray(pool[:limit])
    scratch = np.empty(max(limit, 1), dtype=np.int64)

    cdef int32_t[::1] sdv = split_dim
    cdef double[::1] svv = split_val
    cdef int32_t[::1] lv = left
    cdef int32_t[::1] rv = right
    cdef int32_t[::1] szv = size
    cdef int64_t[::1] iv = idx
    cdef int64_t[::1] scv = scratch
    cdef Py_ssize_t n_nodes = 0

    with nogil:
        _tree_build(dv, &iv[0], limit, 0, height_limit, &state,
                    &sdv[0], &svv[0], &lv[0], &rv[0], &szv[0],
                    &n_nodes, &scv[0], d)

    return (split_dim[:n_nodes].copy(), split_val[:n_nodes].copy(),
            left[:n_nodes].copy(), right[:n_nodes].copy(),
            size[:n_nodes].copy())


def iforest_path_sums(sdim, sval, lch, rch, sz, offsets, queries, c_table):
    """Per-query sums of (leaf depth + c_table[leaf size]) over trees."""
    cdef int32_t[::1] sd = np.ascontiguousarray(sdim, dtype=np.int32)
    cdef double[::1] sv = np.ascontiguousarray(sval, dtype=np.float64)
    cdef int32_t[::1] lc = np.ascontiguousarray(lch, dtype=np.int32)
    cdef int32_t[::1] rc = np.ascontiguousarray(rch, dtype=np.int32)
    cdef int32_t[::1] szv = np.ascontiguousarray(sz, dtype=np.int32)
    cdef int64_t[::1] off = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef double[:, ::1] qv = np.ascontiguousarray(queries, dtype=np.float64)
    cdef double[::1] ct = np.ascontiguousarray(c_table, dtype=np.float64)

    cdef Py_ssize_t m = qv.shape[0]
    cdef Py_ssize_t n_trees = off.shape[0] - 1
    out = np.zeros(m, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t q, t, base, node
    cdef double depth, acc

    with nogil:
        for q in range(m):
            acc = 0.0
            for t in range(n_trees):
                base = off[t]
                node = 0
                depth = 0.0
                while sd[base + node] >= 0:
                    if qv[q, sd[base + node]] < sv[base + node]:
                        node = lc[base + node]
                    else:
                        node = rc[base + node]
                    depth = depth + 1.0
                acc = acc + (depth + ct[szv[base + node]])
            ov[q] = acc
    return out


def smo_solve(K, alpha, grad, double upper, double tol, Py_ssize_t max_iter):
    """Two-coordinate dual descent; see pykern.smo_solve for the contract."""
    cdef double[:, ::1] Kv = np.ascontiguousarray(K, dtype=np.float64)
    cdef double[::1] av = alpha
    cdef double[::1] gv = grad
    cdef Py_ssize_t n = av.shape[0]
    cdef Py_ssize_t it, i, j, t
    cdef double gmax, gmin, quad, step, bound_i, bound_j, new_ai, new_aj, g
    cdef Py_ssize_t done = max_iter
    cdef bint converged = False

    with nogil:
        for it in range(max_iter):
            i = -1
            j = -1
            gmax = -INFINITY
            gmin = INFINITY
            for t in range(n):
                g = gv[t]
                if av[t] > 0.0 and g > gmax:
                    gmax = g
                    i = t
                if av[t] < upper and g < gmin:
                    gmin = g
                    j = t
            if i < 0 or j < 0:
                done = it
                converged = True
                break
            if gmax - gmin <= tol:
                done = it
                converged = True
                break
            quad = Kv[i, i] + Kv[j, j] - 2.0 * Kv[i, j]
            if quad <= 0.0:
                quad = 1e-12
            step = (gmax - gmin) / quad
            bound_i = av[i]
            bound_j = upper - av[j]
            if step > bound_i:
                step = bound_i
            if step > bound_j:
                step = bound_j
            new_ai = av[i] - step
            new_aj = av[j] + step
            if step == bound_i:
                new_ai = 0.0
            if step == bound_j:
                new_aj = upper
            av[i] = new_ai
            av[j] = new_aj
            for t in range(n):
                gv[t] = gv[t] + step * (Kv[j, t] - Kv[i, t])
    return done, converged
