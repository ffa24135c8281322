# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels; same contracts and arithmetic as ``_pykernels``."""

import numpy as np


cdef void _check_prefix_trees(long long[::1] par, long long[::1] cuts) except *:
    cdef Py_ssize_t n = par.shape[0]
    cdef Py_ssize_t m = cuts.shape[0]
    cdef Py_ssize_t ci = 0
    cdef long long prev = 0
    cdef long long roots = 0
    cdef long long max_parent = -1
    cdef long long r, p
    for ci in range(m):
        if cuts[ci] < prev or cuts[ci] > n:
            raise ValueError(f"cuts must be nondecreasing within [0, {n}], got {cuts[ci]}")
        prev = cuts[ci]
    ci = 0
    for r in range(n + 1):
        while ci < m and cuts[ci] == r:
            if r > 0 and (roots != 1 or max_parent >= r):
                raise ValueError(
                    f"prefix of {r} posts is not a single reply tree "
                    f"({roots} roots, parent rank {max_parent})"
                )
            ci += 1
        if r == n:
            break
        p = par[r]
        if p < 0:
            roots += 1
        elif p > max_parent:
            max_parent = p


def tree_depths(parents):
    return _depths(parents).tolist()


cdef _depths(parents):
    cdef long long[::1] par = np.ascontiguousarray(parents, dtype=np.int64)
    cdef Py_ssize_t n = par.shape[0]
    depth_arr = np.full(n, -1, dtype=np.int64)
    chain_arr = np.empty(n + 1, dtype=np.int64)
    cdef long long[::1] depth = depth_arr
    cdef long long[::1] chain = chain_arr
    cdef Py_ssize_t start, top
    cdef long long node, d
    for start in range(n):
        if depth[start] >= 0:
            continue
        top = 0
        node = start
        while node >= 0 and depth[node] < 0:
            if top > n:
                raise ValueError("parent array contains a cycle")
            chain[top] = node
            top += 1
            node = par[node]
            if node >= n:
                raise ValueError(f"parent index {node} out of range")
        d = -1 if node < 0 else depth[node]
        while top > 0:
            top -= 1
            d += 1
            depth[chain[top]] = d
    return depth_arr


def wiener_prefix_series(parents, cuts):
    cdef long long[::1] par = np.ascontiguousarray(parents, dtype=np.int64)
    cdef long long[::1] cut_v = np.ascontiguousarray(cuts, dtype=np.int64)
    _check_prefix_trees(par, cut_v)
    cdef long long[::1] depth = _depths(par)
    cdef Py_ssize_t m = cut_v.shape[0]
    out_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef long long total = 0
    cdef long long d, cut, r
    cdef long long done = 0
    cdef Py_ssize_t i
    for i in range(m):
        cut = cut_v[i]
        for r in range(done, cut):
            d = depth[r]
            total += d * (d + 1) // 2
        done = cut
        if cut < 2:
            out[i] = 0.0
        else:
            out[i] = <double>total / <double>(cut * (cut - 1))
    return out_arr.tolist()


def accumulate_step_curve(times, long long grid_size, double[::1] mean, double[::1] m2, long long k):
    cdef double[::1] t = np.ascontiguousarray(times, dtype=np.float64)
    cdef Py_ssize_t n = t.shape[0]
    cdef Py_ssize_t p = 0
    cdef long long g
    cdef double lam, x, delta
    cdef double nf = <double>n
    cdef double kf = <double>k
    for g in range(grid_size + 1):
        lam = <double>g / <double>grid_size
        while p < n and t[p] <= lam:
            p += 1
        x = <double>p / nf
        delta = x - mean[g]
        mean[g] += delta / kf
        m2[g] += delta * (x - mean[g])
