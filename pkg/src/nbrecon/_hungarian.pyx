# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled shortest-augmenting-path assignment kernel.

Same contract as the pure-Python solver in nbrecon.assignment; that
module prefers this one when the extension built.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


cdef void _solve_one(double[:, :] cost, long[:] perm, double* total,
                     double[:] u, double[:] v, double[:] minv,
                     long[:] p, long[:] way, unsigned char[:] used) nogil:
    # Potentials u/v over rows/columns; p[j] is the row matched to
    # column j (1-indexed, 0 = virtual start).
    cdef Py_ssize_t n = cost.shape[0]
    cdef Py_ssize_t i, j, j0, j1, i0
    cdef double delta, cur

    for j in range(n + 1):
        u[j] = 0.0
        v[j] = 0.0
        p[j] = 0

    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        for j in range(n + 1):
            minv[j] = INFINITY
            used[j] = 0
        while True:
            used[j0] = 1
            i0 = p[j0]
            delta = INFINITY
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0 != 0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1

    total[0] = 0.0
    for j in range(1, n + 1):
        perm[p[j] - 1] = j - 1
    for i in range(n):
        total[0] += cost[i, perm[i]]


def solve(cost):
    """(permutation, total) minimizing sum(cost[i, perm[i]])."""
    cdef double[:, :] c = np.ascontiguousarray(cost, dtype=np.float64)
    cdef Py_ssize_t n = c.shape[0]
    perm_arr = np.empty(n, dtype=np.int64)
    cdef long[:] perm = perm_arr
    cdef double total = 0.0
    u = np.empty(n + 1)
    v = np.empty(n + 1)
    minv = np.empty(n + 1)
    p = np.empty(n + 1, dtype=np.int64)
    way = np.empty(n + 1, dtype=np.int64)
    used = np.empty(n + 1, dtype=np.uint8)
    _solve_one(c, perm, &total, u, v, minv, p, way, used)
    return perm_arr, total


def solve_batch(costs):
    """Vector version over a (batch, n, n) stack of cost matrices."""
    cdef double[:, :, :] c = np.ascontiguousarray(costs, dtype=np.float64)
    cdef Py_ssize_t b = c.shape[0]
    cdef Py_ssize_t n = c.shape[1]
    perms_arr = np.empty((b, n), dtype=np.int64)
    totals_arr = np.empty(b, dtype=np.float64)
    cdef long[:, :] perms = perms_arr
    cdef double[:] totals = totals_arr
    cdef double total
    cdef Py_ssize_t k
    u = np.empty(n + 1)
    v = np.empty(n + 1)
    minv = np.empty(n + 1)
    p = np.empty(n + 1, dtype=np.int64)
    way = np.empty(n + 1, dtype=np.int64)
    used = np.empty(n + 1, dtype=np.uint8)
    cdef double[:] uv_u = u, uv_v = v, uv_minv = minv
    cdef long[:] uv_p = p, uv_way = way
    cdef unsigned char[:] uv_used = used
    for k in range(b):
        _solve_one(c[k], perms[k], &total, uv_u, uv_v, uv_minv, uv_p, uv_way, uv_used)
        totals[k] = total
    return perms_arr, totals_arr
