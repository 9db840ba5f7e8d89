#!/usr/bin/env python3
"""Timing comparison of the compiled (numba) and pure-numpy hot kernels.

The two kernels dominating grid-search runtime are the pairwise squared
distances behind the Gaussian kernel matrix and the nearest-center scan
inside Lloyd iterations. Both backends are imported side by side, checked
for agreement, and timed over a few shapes.

Usage: python benchmarks/bench_backends.py [--repeats 5]
"""

import argparse
import time

import numpy as np

from imcc._accel import backends, warmup

SHAPES = [
    # (rows_a, rows_b, dims) for pairwise; (points, centers, dims) for nearest
    (500, 500, 20),
    (2000, 2000, 50),
    (2000, 256, 294),
    (5000, 128, 100),
]


def best_of(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    impls = backends()
    warmup()
    if "numba" in impls:
        # compile both entry points before timing
        z = np.zeros((2, 3))
        impls["numba"][0](z, z)
        impls["numba"][1](z, z)

    rng = np.random.default_rng(0)
    header = f"{'kernel':<16} {'shape':<22}" + "".join(
        f"{name + ' (ms)':>14}" for name in impls
    )
    if len(impls) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))

    for m, n, d in SHAPES:
        a = rng.normal(size=(m, d))
        b = rng.normal(size=(n, d))
        for label, pick in (("pairwise_sq", 0), ("nearest_center", 1)):
            results = {}
            times = {}
            for name, fns in impls.items():
                fn = fns[pick]
                results[name] = fn(a, b)
                times[name] = best_of(lambda: fn(a, b), args.repeats)
            names = list(impls)
            if len(names) == 2:
                first, second = (
                    results[names[0]],
                    results[names[1]],
                )
                if pick == 0:
                    assert np.allclose(first, second, rtol=1e-10, atol=1e-10)
                else:
                    assert np.array_equal(first[0], second[0])
                    assert np.allclose(first[1], second[1], rtol=1e-10)
            row = f"{label:<16} {f'{m}x{n}x{d}':<22}" + "".join(
                f"{times[name] * 1e3:>14.2f}" for name in impls
            )
            if len(names) == 2:
                row += f"{times['numpy'] / times['numba']:>9.1f}x"
            print(row)

    if len(impls) < 2:
        print("\nnumba unavailable; only the numpy fallback was timed.")


if __name__ == "__main__":
    main()
