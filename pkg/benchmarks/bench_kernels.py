"""Compare the compiled and pure-Python kernel backends.

Usage:
    python3 benchmarks/bench_kernels.py [--rows 20000] [--repeats 5]

Times the two hot kernels (nearest-centroid assignment and within-cluster
distance sums) on random data and reports the speedup, after checking that
both backends agree on the result.
"""

import argparse
import time

import numpy as np

from loadshapes import _pykernels

try:
    from loadshapes import _ckernels
except ImportError:
    _ckernels = None


def _time(fn, *args, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", type=int, default=20000)
    parser.add_argument("--dims", type=int, default=24)
    parser.add_argument("--clusters", type=int, default=12)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    points = rng.random((args.rows, args.dims))
    centroids = rng.random((args.clusters, args.dims))
    labels = rng.integers(0, args.clusters, args.rows)

    backends = [("python", _pykernels)]
    if _ckernels is not None:
        backends.insert(0, ("c", _ckernels))
    else:
        print("compiled backend not built; timing pure python only")

    ref_labels, ref_sqdist = _pykernels.assign_nearest(points, centroids)
    ref_sums, ref_counts = _pykernels.cluster_dist_sums(
        points, labels, args.clusters
    )

    print(f"rows={args.rows} dims={args.dims} clusters={args.clusters}")
    print(f"{'kernel':24s}{'backend':>10s}{'best (s)':>12s}")
    timings = {}
    for name, mod in backends:
        got_labels, got_sqdist = mod.assign_nearest(points, centroids)
        assert np.array_equal(got_labels, ref_labels), f"{name}: labels differ"
        assert np.allclose(got_sqdist, ref_sqdist, atol=1e-7)
        sums, counts = mod.cluster_dist_sums(points, labels, args.clusters)
        assert np.array_equal(counts, ref_counts)
        assert np.allclose(sums, ref_sums, atol=1e-7), f"{name}: sums differ"

        t_assign = _time(mod.assign_nearest, points, centroids,
                         repeats=args.repeats)
        t_sums = _time(mod.cluster_dist_sums, points, labels, args.clusters,
                       repeats=args.repeats)
        timings[name] = (t_assign, t_sums)
        print(f"{'assign_nearest':24s}{name:>10s}{t_assign:>12.4f}")
        print(f"{'cluster_dist_sums':24s}{name:>10s}{t_sums:>12.4f}")

    if len(timings) == 2:
        for i, kernel in enumerate(("assign_nearest", "cluster_dist_sums")):
            ratio = timings["python"][i] / timings["c"][i]
            print(f"{kernel}: compiled is {ratio:.1f}x the pure-python speed")


if __name__ == "__main__":
    main()
