#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Runs each bundled scenario family on both backends and reports steps per
second and the speedup. Trajectories are asserted identical first, so the
numbers compare the same computation.

Usage: python benchmarks/bench_backends.py [--repeat N]
"""
import argparse
import time

import numpy as np

import veloshield as vs
from veloshield.scenario import load_scenario, resolve_scenario_path

SCENARIOS = [
    "double_integrator_two_obstacles",
    "segway_planar_wall",
    "segway_spatial_course",
    "single_integrator_course",
    "unicycle_course",
]


def time_run(scn, backend, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        log = vs.simulate(scn, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, log


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--duration", type=float, default=10.0,
                        help="override scenario duration (s)")
    args = parser.parse_args()

    if "native" not in vs.available_backends():
        raise SystemExit("compiled backend unavailable; build the extension first")

    print(f"{'scenario':38s} {'steps':>8s} {'python':>12s} {'native':>12s} {'speedup':>8s}")
    for name in SCENARIOS:
        scn = load_scenario(resolve_scenario_path(name))
        scn = scn.with_values(duration=min(args.duration, scn.duration))
        steps = scn.nsteps()
        t_py, log_py = time_run(scn, "python", args.repeat)
        t_na, log_na = time_run(scn, "native", args.repeat)
        assert np.array_equal(log_py.q, log_na.q), "backend mismatch"
        print(f"{name:38s} {steps:8d} "
              f"{steps / t_py:10.0f}/s {steps / t_na:10.0f}/s "
              f"{t_py / t_na:7.1f}x")


if __name__ == "__main__":
    main()
