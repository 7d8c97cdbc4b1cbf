"""Benchmark the compiled collision kernels against the pure-Python fallback.

Usage: python3 benchmarks/bench_kernels.py [--pairs 200000] [--sweep-steps 2000]
"""
import argparse
import math
import time

import numpy as np

from yieldsim._kernels import _sat_py

try:
    from yieldsim._kernels import _sat
except ImportError:
    _sat = None


def bench_overlap(impl, boxes_a, boxes_b):
    start = time.perf_counter()
    hits = 0
    for a, b in zip(boxes_a, boxes_b):
        if impl.obb_overlap(*a, *b):
            hits += 1
    return time.perf_counter() - start, hits


def bench_sweep(impl, trajs, dims):
    start = time.perf_counter()
    found = 0
    for (xa, ya, ha), (xb, yb, hb) in trajs:
        if impl.first_overlap_index(xa, ya, ha, xb, yb, hb, *dims, *dims, 0) >= 0:
            found += 1
    return time.perf_counter() - start, found


def make_boxes(rng, n):
    rows = np.column_stack([
        rng.uniform(-6, 6, n), rng.uniform(-6, 6, n),
        rng.uniform(-math.pi, math.pi, n),
        rng.uniform(1, 6, n), rng.uniform(0.5, 3, n),
    ])
    return [tuple(r) for r in rows]


def make_sweeps(rng, n_pairs, steps):
    trajs = []
    for _ in range(n_pairs):
        t = np.arange(steps) * 0.5
        xa = rng.uniform(-20, 0) + rng.uniform(5, 14) * t
        xb = rng.uniform(10, 40) + rng.uniform(4, 10) * t
        ya = np.zeros(steps)
        yb = rng.uniform(-3, 3) + np.zeros(steps)
        ha = np.zeros(steps)
        trajs.append(
            ((xa, ya, ha), (np.ascontiguousarray(xb), yb, ha.copy()))
        )
    return trajs


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--pairs", type=int, default=200_000)
    parser.add_argument("--sweep-pairs", type=int, default=200)
    parser.add_argument("--sweep-steps", type=int, default=2_000)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    boxes_a = make_boxes(rng, args.pairs)
    boxes_b = make_boxes(rng, args.pairs)
    sweeps = make_sweeps(rng, args.sweep_pairs, args.sweep_steps)

    print(f"{'workload':<34}{'python':>10}{'compiled':>10}{'speedup':>9}")
    py_t, py_hits = bench_overlap(_sat_py, boxes_a, boxes_b)
    if _sat is not None:
        cy_t, cy_hits = bench_overlap(_sat, boxes_a, boxes_b)
        assert cy_hits == py_hits, "kernel mismatch"
        print(
            f"{'obb_overlap x' + str(args.pairs):<34}"
            f"{py_t:>9.3f}s{cy_t:>9.3f}s{py_t / cy_t:>8.1f}x"
        )
    else:
        print(f"{'obb_overlap x' + str(args.pairs):<34}{py_t:>9.3f}s{'n/a':>10}")

    py_t, py_found = bench_sweep(_sat_py, sweeps, (4.5, 2.0))
    if _sat is not None:
        cy_t, cy_found = bench_sweep(_sat, sweeps, (4.5, 2.0))
        assert cy_found == py_found, "kernel mismatch"
        print(
            f"{'first_overlap_index sweeps':<34}"
            f"{py_t:>9.3f}s{cy_t:>9.3f}s{py_t / cy_t:>8.1f}x"
        )
    else:
        print(f"{'first_overlap_index sweeps':<34}{py_t:>9.3f}s{'n/a':>10}")


if __name__ == "__main__":
    main()
