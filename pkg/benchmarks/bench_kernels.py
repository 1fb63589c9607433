"""Benchmark the compiled kernels against the NumPy fallback.

Run from the repository root after building the extension:

    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --sizes 500,2000 --dims 4 --repeats 5
"""

import argparse
import time

import numpy as np

from geowise._kernels import _py

try:
    from geowise._kernels import _core
except ImportError:
    _core = None


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="200,1000,3000", help="comma-separated row counts")
    parser.add_argument("--dims", type=int, default=4, help="predictor dimensionality")
    parser.add_argument("--repeats", type=int, default=3, help="take the best of this many runs")
    parser.add_argument("--k", type=int, default=3, help="neighbors for the k-NN benchmark")
    args = parser.parse_args()

    if _core is None:
        print("compiled extension not available; showing the fallback alone")

    rng = np.random.default_rng(0)
    sizes = [int(s) for s in args.sizes.split(",")]

    header = f"{'kernel':<26}{'n':>7}{'python':>12}{'compiled':>12}{'speedup':>9}"
    print(header)
    print("-" * len(header))

    for n in sizes:
        X = rng.normal(size=(n, args.dims))
        Q = rng.normal(size=(max(n // 4, 1), args.dims))
        coords = rng.uniform(0, 100, size=(n, 2))
        cases = [
            ("pairwise_mean_distance", lambda impl: impl.pairwise_mean_distance(X)),
            ("nearest_other_distance", lambda impl: impl.nearest_other_distance(X)),
            ("nearest_cross_distance", lambda impl: impl.nearest_cross_distance(Q, X)),
            ("knn_indices", lambda impl: impl.knn_indices(coords, args.k)),
        ]
        for name, call in cases:
            t_py = best_of(lambda: call(_py), args.repeats)
            if _core is not None:
                t_c = best_of(lambda: call(_core), args.repeats)
                print(f"{name:<26}{n:>7}{t_py:>12.4f}{t_c:>12.4f}{t_py / t_c:>8.1f}x")
            else:
                print(f"{name:<26}{n:>7}{t_py:>12.4f}{'-':>12}{'-':>9}")
    if _core is not None:
        # sanity: both backends agree on a shared case
        a = _py.pairwise_mean_distance(X)
        b = _core.pairwise_mean_distance(X)
        assert abs(a - b) <= 1e-12 * max(abs(a), 1.0), (a, b)


if __name__ == "__main__":
    main()
