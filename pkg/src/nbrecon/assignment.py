"""Minimum-cost assignment on square matrices.

Two interchangeable backends solve the same problem: a compiled
shortest-augmenting-path kernel (nbrecon._hungarian, built from Cython
when available) and the pure-Python implementation below. The compiled
one is preferred at import time; set NBRECON_PURE_PY=1 to force the
fallback. Both return identical permutations because the algorithm and
tie handling match step for step.
"""

import os

import numpy as np

from .errors import ContractError, DimensionError

try:
    from . import _hungarian as _ext
except ImportError:  # extension not built; fallback below is exact
    _ext = None

if os.environ.get("NBRECON_PURE_PY") == "1":
    _ext = None

ASSIGNMENT_BACKEND = "cython" if _ext is not None else "python"


def _check(cost, batched=False):
    cost = np.asarray(cost, dtype=np.float64)
    want = 3 if batched else 2
    if cost.ndim != want:
        raise DimensionError(
            "cost must be %d-dimensional, got shape %s" % (want, (cost.shape,))
        )
    if cost.shape[-1] != cost.shape[-2]:
        raise DimensionError("cost matrix must be square, got shape %s" % (cost.shape,))
    if cost.shape[-1] == 0:
        raise DimensionError("cost matrix must be non-empty")
    if not np.all(np.isfinite(cost)):
        raise ContractError("cost matrix contains NaN or infinite entries")
    return np.ascontiguousarray(cost)


def _solve_py(cost):
    # e-maxx potentials formulation; rows/cols are 1-indexed with a
    # virtual column 0 so the augmenting walk has a uniform start.
    n = cost.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=np.int64)
    way = np.zeros(n + 1, dtype=np.int64)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used
            free[0] = False
            cur = cost[i0 - 1, :] - u[i0] - v[1:]
            idx = np.flatnonzero(free)
            better = cur[idx - 1] < minv[idx]
            upd = idx[better]
            minv[upd] = cur[upd - 1]
            way[upd] = j0
            j1 = idx[np.argmin(minv[idx])]
            delta = minv[j1]
            u[p[used]] += delta
            v[used] -= delta
            minv[free] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0 != 0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    perm = np.empty(n, dtype=np.int64)
    perm[p[1:] - 1] = np.arange(n)
    return perm, float(cost[np.arange(n), perm].sum())


def solve(cost):
    """Permutation pi minimizing sum_i cost[i, pi[i]], plus that sum.

    Returns (perm, total) where perm is an int64 array of length n.
    """
    cost = _check(cost)
    if _ext is not None:
        perm, total = _ext.solve(cost)
        return perm, float(total)
    return _solve_py(cost)


def solve_batch(costs):
    """solve() over a (batch, n, n) stack; returns (perms, totals)."""
    costs = _check(costs, batched=True)
    if _ext is not None:
        perms, totals = _ext.solve_batch(costs)
        return perms, totals
    b, n, _ = costs.shape
    perms = np.empty((b, n), dtype=np.int64)
    totals = np.empty(b)
    for k in range(b):
        perms[k], totals[k] = _solve_py(costs[k])
    return perms, totals
