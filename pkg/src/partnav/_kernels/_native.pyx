# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: exact cross nearest-neighbor and farthest-point
sampling. Must stay numerically identical to ``fallback.py`` (same operation
order, strict-< / strict-> comparisons so ties resolve to the lowest index).
"""
import numpy as np

cimport numpy as cnp

cnp.import_array()


def cross_nn(const double[:, ::1] a, const double[:, ::1] b):
    """For each row of ``a``: index of the nearest row of ``b`` (lowest index
    on ties) and the squared euclidean distance to it."""
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t m = b.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] idx = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sq = np.empty(n, dtype=np.float64)
    cdef long[:] idx_v = idx
    cdef double[:] sq_v = sq
    cdef Py_ssize_t i, j, best_j
    cdef double dx, dy, dz, d, best
    for i in range(n):
        best = -1.0
        best_j = 0
        for j in range(m):
            dx = a[i, 0] - b[j, 0]
            dy = a[i, 1] - b[j, 1]
            dz = a[i, 2] - b[j, 2]
            d = dx * dx + dy * dy + dz * dz
            if best < 0.0 or d < best:
                best = d
                best_j = j
        idx_v[i] = best_j
        sq_v[i] = best
    return idx, sq


def farthest_point_indices(const double[:, ::1] pts, Py_ssize_t n, Py_ssize_t start):
    """Greedy farthest-point selection of ``n`` indices, beginning at
    ``start``. Ties pick the lowest unselected index."""
    cdef Py_ssize_t total = pts.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] order = np.empty(n, dtype=np.int64)
    cdef long[:] order_v = order
    cdef cnp.ndarray[cnp.float64_t, ndim=1] mind = np.empty(total, dtype=np.float64)
    cdef double[:] mind_v = mind
    cdef Py_ssize_t i, k, cur, best_i
    cdef double dx, dy, dz, d, best
    cdef double inf = np.inf
    for i in range(total):
        mind_v[i] = inf
    cur = start
    order_v[0] = cur
    for k in range(1, n):
        mind_v[cur] = -1.0
        best = -1.0
        best_i = 0
        for i in range(total):
            if mind_v[i] >= 0.0:
                dx = pts[i, 0] - pts[cur, 0]
                dy = pts[i, 1] - pts[cur, 1]
                dz = pts[i, 2] - pts[cur, 2]
                d = dx * dx + dy * dy + dz * dz
                if d < mind_v[i]:
                    mind_v[i] = d
                if mind_v[i] > best:
                    best = mind_v[i]
                    best_i = i
        cur = best_i
        order_v[k] = cur
    return order
