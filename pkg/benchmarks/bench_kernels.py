"""Benchmark the characteristic tracer: compiled core vs numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from adiabat import kernels
from adiabat.kernels import FIELD_TWO_LADDER, FIELD_TWO_TERM

CASES = [
    ("power_law", FIELD_TWO_TERM, np.array([0.5, 3.0, 2.0, 0.0, 0.0, 0.0]), 1.0, 4.0),
    ("two_term", FIELD_TWO_TERM, np.array([1.0, 2.0, 1.0, 0.5, 1.0, 0.5]), 1.0, 2.7),
    ("two_ladder", FIELD_TWO_LADDER, np.array([70 / 16, 70 / 16, 16.0, 16.0]), 1.0, 2.0),
]

BATCHES = (64, 1024, 16384)


def time_call(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    backends = {"python": kernels.get_backend("python")}
    try:
        backends["compiled"] = kernels.get_backend("compiled")
    except ImportError:
        print("compiled backend unavailable; benchmarking the fallback only")

    print(f"active backend: {kernels.BACKEND}")
    print(f"{'case':<12} {'nodes':>7} " +
          " ".join(f"{name:>12}" for name in backends) +
          ("  speedup" if len(backends) == 2 else ""))
    for case, kind, params, a0, a1 in CASES:
        for n in BATCHES:
            eps0 = np.geomspace(1e-3, 30.0, n)
            times = {}
            for name, backend in backends.items():
                times[name] = time_call(
                    lambda b=backend: kernels.trace_batch(
                        kind, params, eps0, a0, a1, backend=b),
                    args.repeats)
            row = f"{case:<12} {n:>7} " + " ".join(
                f"{times[name] * 1e3:>10.2f}ms" for name in backends)
            if len(times) == 2:
                row += f"  {times['python'] / times['compiled']:>6.1f}x"
            print(row)

    # agreement sanity: identical algorithm, rounding-level differences only
    if len(backends) == 2:
        eps0 = np.geomspace(1e-3, 30.0, 4096)
        outs = [
            kernels.trace_batch(FIELD_TWO_TERM, CASES[1][2], eps0, 1.0, 2.7, backend=b)
            for b in backends.values()
        ]
        print(f"max backend disagreement: {np.max(np.abs(outs[0] / outs[1] - 1)):.2e}")


if __name__ == "__main__":
    main()
