"""Compiled core vs pure-Python fallback on the hot kernels.

    python benchmarks/bench_backends.py [--reps 3]

Prints one CSV row per (kernel, backend) with the median wall-clock.
"""
from __future__ import annotations

import argparse
import statistics
import sys
import time

import numpy as np

from dmcquant import _backend, baselines, dp
from dmcquant.channel import PamSpec, discretize_pam
from dmcquant.cost import CostFamily, SegmentCostView
from dmcquant.oracle import random_channel


def _median(fn, reps):
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def cases():
    pam = discretize_pam(PamSpec.standard(2, 1.0, 1000))
    cost = CostFamily(pam.px, 1.0)
    rnd = random_channel(np.random.default_rng(0), 4, 256)
    rcost = CostFamily(rnd.px, 1.0)
    yield "dp_standard q=2 N=1000 M=8", lambda: dp.dp_standard(SegmentCostView(pam, cost), 8)
    yield "dp_yao q=2 N=1000 M=8", lambda: dp.dp_yao(SegmentCostView(pam, cost), 8, qi=True)
    yield "dp_smawk q=2 N=1000 M=8", lambda: dp.dp_smawk(SegmentCostView(pam, cost), 8, qi=True)
    yield "check_qi q=2 N=1000", lambda: dp.check_qi(SegmentCostView(pam, cost))
    yield "gc_naive q=4 N=256 M=16", lambda: baselines.run_gc(rnd, rcost, 16, heap=False)
    yield "gc_heap q=4 N=256 M=16", lambda: baselines.run_gc(rnd, rcost, 16, heap=True)


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--reps", type=int, default=3)
    args = p.parse_args(argv)
    backends = _backend.available()
    print("kernel,backend,median_s,speedup_vs_python")
    for name, fn in cases():
        times = {}
        for b in backends:
            with _backend.use(b):
                times[b] = _median(fn, args.reps)
        for b in backends:
            print(f"{name},{b},{times[b]:.6g},{times['python'] / times[b]:.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
