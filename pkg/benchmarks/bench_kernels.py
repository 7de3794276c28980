#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

The hot loops are 1 Hz resampling and energy summation over long
traces (a week of 1 Hz monitoring is ~600k samples per GPU). Run:

    python benchmarks/bench_kernels.py --seconds 604800 --repeats 5
"""

import argparse
import random
import statistics
import time
from array import array

from ecotrace._kernels import available_implementations, fallback


def build_trace(seconds, interval=5.0, seed=7):
    rng = random.Random(seed)
    n = int(seconds / interval) + 1
    times = array("d", (interval * i for i in range(n)))
    powers = array("d", (rng.uniform(30.0, 260.0) for _ in range(n)))
    return times, powers


def timeit(fn, repeats):
    samples = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - start)
    return statistics.median(samples)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seconds", type=int, default=604_800,
                        help="trace span in seconds (default: one week)")
    parser.add_argument("--interval", type=float, default=5.0,
                        help="source sampling interval (default 5 s)")
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    impls = {"pure-python": fallback}
    if "compiled" in available_implementations():
        from ecotrace._kernels import _core

        impls["compiled"] = _core
    else:
        print("note: compiled extension not built; benchmarking fallback only")

    times, powers = build_trace(args.seconds, args.interval)
    grids = {
        name: impl.resample_linear_1hz(times, powers) for name, impl in impls.items()
    }
    if len(grids) == 2:
        a, b = grids.values()
        assert a[0] == b[0] and list(a[1]) == list(b[1]), "implementations disagree"
    grid_values = next(iter(grids.values()))[1]

    workloads = {
        "resample_linear_1hz": lambda impl: impl.resample_linear_1hz(times, powers),
        "rect_sum (1 Hz grid)": lambda impl: impl.rect_sum(grid_values),
        "trap_sum (raw)": lambda impl: impl.trap_sum(times, powers),
        "find_gaps": lambda impl: impl.find_gaps(times, 2.0 * args.interval),
    }

    print(f"trace: {len(times)} source samples -> {len(grid_values)} grid samples, "
          f"median of {args.repeats} runs")
    header = f"{'kernel':24s}" + "".join(f"{name:>14s}" for name in impls)
    if len(impls) == 2:
        header += f"{'speedup':>10s}"
    print(header)
    for name, workload in workloads.items():
        timings = {
            impl_name: timeit(lambda impl=impl: workload(impl), args.repeats)
            for impl_name, impl in impls.items()
        }
        row = f"{name:24s}" + "".join(
            f"{seconds * 1e3:11.2f} ms" for seconds in timings.values()
        )
        if len(timings) == 2:
            py, c = timings["pure-python"], timings["compiled"]
            row += f"{py / c:9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
