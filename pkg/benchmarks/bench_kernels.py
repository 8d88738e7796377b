"""Time the compiled and numpy kernels on the same workload.

    python benchmarks/bench_kernels.py [--queries 500] [--dim 256] [--k 11] [--p 2]

Reports wall time per backend, the speed-up, and the largest distance
difference between them (they use different projection formulas, so this
doubles as a cross-check).
"""

import argparse
import time

import numpy as np

from loma import kernels


def bench(backend, points, queries, k, p, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        dist, _ = backend.batch_class_distances(points, queries, k, p)
        best = min(best, time.perf_counter() - t0)
    return best, dist


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=1100, help="training points in the class")
    ap.add_argument("--queries", type=int, default=500)
    ap.add_argument("--dim", type=int, default=256)
    ap.add_argument("--k", type=int, default=11)
    ap.add_argument("--p", type=int, default=2)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    points = rng.standard_normal((args.points, args.dim))
    queries = rng.standard_normal((args.queries, args.dim))

    print(f"class size {args.points}, {args.queries} queries, D={args.dim}, K={args.k}, p={args.p}")
    results = {}
    for name in sorted(kernels.BACKENDS):
        secs, dist = bench(kernels.get_backend(name), points, queries, args.k, args.p, args.repeats)
        results[name] = (secs, dist)
        print(f"{name:>7}: {secs:8.4f} s  ({secs / args.queries * 1e6:8.1f} us/query)")
    if "cython" not in results:
        print("compiled extension not built; only the numpy fallback was timed")
        return
    (tp, dp), (tc, dc) = results["python"], results["cython"]
    print(f"speed-up: {tp / tc:.1f}x, max |distance difference|: {np.abs(dp - dc).max():.2e}")


if __name__ == "__main__":
    main()
