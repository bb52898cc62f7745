"""Time the slot-outcome kernels against each other.

Both implementations consume identical pre-drawn arrays, so besides the
wall-clock comparison this doubles as an equivalence check on a large
random workload.

Run:  python3 benchmarks/bench_kernels.py [--trials 200000] [--n 50 195]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from bccrsim import kernels


def bench(impl, choices, priorities, preambles, levels, repeats: int = 3) -> tuple[float, np.ndarray]:
    best = float("inf")
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = impl(choices, priorities, preambles, levels)
        best = min(best, time.perf_counter() - start)
    return best, result


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=200_000)
    parser.add_argument("--n", type=int, nargs="+", default=[50, 195])
    parser.add_argument("--preambles", type=int, default=30)
    parser.add_argument("--levels", type=int, default=4)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    print(f"active implementation: {kernels.IMPLEMENTATION}")
    if not kernels.COMPILED:
        print("compiled extension not available; timing the pure kernel only")

    rng = np.random.default_rng(args.seed)
    for n in args.n:
        choices = rng.integers(0, args.preambles, size=(args.trials, n), dtype=np.int32)
        priorities = rng.integers(0, args.levels, size=(args.trials, n), dtype=np.int32)
        pure_time, pure_out = bench(
            kernels.count_successes_pure, choices, priorities, args.preambles, args.levels
        )
        line = (
            f"n={n:4d} trials={args.trials}: pure {pure_time:8.4f}s"
            f" ({args.trials / pure_time:,.0f} trials/s)"
        )
        if kernels.COMPILED:
            cy_time, cy_out = bench(
                kernels.count_successes_compiled,
                choices,
                priorities,
                args.preambles,
                args.levels,
            )
            if not np.array_equal(pure_out, cy_out):
                print("MISMATCH between kernels; do not trust these numbers")
                return 1
            line += (
                f" | compiled {cy_time:8.4f}s"
                f" ({args.trials / cy_time:,.0f} trials/s)"
                f" | speedup {pure_time / cy_time:5.2f}x"
            )
        print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
