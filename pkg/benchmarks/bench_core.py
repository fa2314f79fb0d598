#!/usr/bin/env python3
"""Benchmark the compiled SMO core against the numpy fallback.

Both backends implement the identical update sequence, so outputs are
checked for bit equality while timing the solve. Run from the repo root
after building the extension:

    python3 setup.py build_ext --inplace
    python3 benchmarks/bench_core.py
"""

import time

import numpy as np

from onsetml._core import pure
from onsetml.data import synth_dataset
from onsetml.kernels import KernelSpec, default_sigma, gram_matrix

try:
    from onsetml._core import _native as native
except ImportError:
    native = None


def problem(n, seed):
    data = synth_dataset(n, 8, 0.4, separation=1.0, seed=seed)
    X = (data.values - data.values.mean(0)) / data.values.std(0)
    K = gram_matrix(X, KernelSpec("rbf", default_sigma(8)))
    y = 2.0 * data.labels.astype(float) - 1.0
    c = np.ones(n)
    return K, y, c


def run(solver, K, y, c, repeats=3):
    best = np.inf
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = solver(K, y, c, 1e-3, 100 * len(y))
        best = min(best, time.perf_counter() - start)
    return best, result


def main():
    if native is None:
        print("compiled core not built; run: python3 setup.py build_ext --inplace")
        return 1
    print(f"{'n':>6} {'iters':>7} {'pure (s)':>10} {'native (s)':>11} "
          f"{'speedup':>8} {'bit-equal':>10}")
    for n in (100, 200, 400, 800, 1600):
        K, y, c = problem(n, seed=n)
        t_pure, r_pure = run(pure.smo_solve, K, y, c)
        t_native, r_native = run(native.smo_solve, K, y, c)
        same = (
            np.array_equal(r_pure[0], r_native[0])
            and float(r_pure[1]) == float(r_native[1])
            and r_pure[3] == r_native[3]
        )
        print(f"{n:>6} {r_native[3]:>7} {t_pure:>10.3f} {t_native:>11.3f} "
              f"{t_pure / t_native:>7.1f}x {str(same):>10}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
