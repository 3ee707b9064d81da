"""Benchmark the compiled assignment kernel against the pure-Python fallback.

Run from the repo root after an editable install:

    python3 benchmarks/bench_assignment.py

Both backends solve identical batches; totals are cross-checked exactly
before timing is reported.
"""

import time

import numpy as np

import nbrecon.assignment as assignment


def _time_batch(fn, costs, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        for c in costs:
            fn(c)
        best = min(best, time.perf_counter() - t0)
    return best / len(costs)


def main():
    rng = np.random.default_rng(0)
    print(f"active backend: {assignment.ASSIGNMENT_BACKEND}")
    if assignment._ext is None:
        print("compiled extension unavailable; timing the fallback only")
    header = f"{'n':>4s} {'batch':>6s} {'python us':>10s} {'cython us':>10s} {'speedup':>8s}"
    print(header)
    print("-" * len(header))
    for n, batch, repeats in ((4, 400, 5), (6, 400, 5), (8, 300, 5),
                              (12, 200, 3), (16, 150, 3), (24, 100, 3)):
        costs = [rng.standard_normal((n, n)) for _ in range(batch)]
        for c in costs[:20]:
            p_py, t_py = assignment._solve_py(c)
            if assignment._ext is not None:
                # totals may differ by an ulp for n >= 8: numpy sums the
                # selected entries pairwise, the kernel serially
                p_cy, t_cy = assignment._ext.solve(c)
                assert p_cy.tolist() == p_py.tolist(), "backends disagree"
                assert abs(t_cy - t_py) <= 1e-12 * max(1.0, abs(t_py))
        t_py = _time_batch(lambda c: assignment._solve_py(c), costs, repeats)
        if assignment._ext is not None:
            t_cy = _time_batch(lambda c: assignment._ext.solve(c), costs, repeats)
            print(f"{n:4d} {batch:6d} {t_py * 1e6:10.1f} {t_cy * 1e6:10.1f} "
                  f"{t_py / t_cy:7.1f}x")
        else:
            print(f"{n:4d} {batch:6d} {t_py * 1e6:10.1f} {'-':>10s} {'-':>8s}")


if __name__ == "__main__":
    main()
