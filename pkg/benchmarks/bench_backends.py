#!/usr/bin/env python3
"""Compare the compiled and pure-Python pivot kernels on routing workloads.

The kernel is chosen at import time via DNNSPLIT_BACKEND, so this
script re-runs itself in a subprocess per backend and prints a table:

    python3 benchmarks/bench_backends.py [--repeat N]
"""

import argparse
import json
import os
import subprocess
import sys
import time


def workload():
    """(name, fn) pairs; each fn returns a work counter (pivots/nodes)."""
    from dnnsplit import policies
    from dnnsplit.formulations import (
        QueueSnapshot,
        build_service_ilp,
        build_single_job_lp,
    )
    from dnnsplit.linprog import solve_ilp, solve_lp
    from dnnsplit.workload import generate_scenario

    def route_lps(n, reps):
        def run():
            iters = 0
            for seed in range(reps):
                scn = generate_scenario(n, 1, 1.0, seed=seed)
                lp, _ = build_single_job_lp(
                    scn.network, scn.jobs[0], QueueSnapshot.zeros(scn.network),
                    relax=True,
                )
                sol = solve_lp(lp)
                iters += sol.iterations
            return iters

        return run

    def service_ilps(n, jobs, reps):
        def run():
            nodes = 0
            for seed in range(reps):
                scn = generate_scenario(n, jobs, 0.5, seed=seed)
                lp, _ = build_service_ilp(scn, delta_s=0.0)
                sol = solve_ilp(lp, time_limit_s=60.0)
                nodes += sol.nodes or 0
            return nodes

        return run

    def greedy(n, jobs, reps):
        def run():
            for seed in range(reps):
                scn = generate_scenario(n, jobs, 0.5, seed=seed)
                policies.greedy_route(scn)
            return 0

        return run

    return [
        ("route-lp n=15 x40", route_lps(15, 40)),
        ("route-lp n=30 x15", route_lps(30, 15)),
        ("service-ilp n=12 J=4 x3", service_ilps(12, 4, 3)),
        ("greedy n=15 J=6 x5", greedy(15, 6, 5)),
    ]


def run_worker(repeat: int) -> None:
    from dnnsplit import _kernels

    out = {"backend": _kernels.BACKEND, "cases": {}}
    for name, fn in workload():
        best = float("inf")
        work = 0
        for _ in range(repeat):
            t0 = time.perf_counter()
            work = fn()
            best = min(best, time.perf_counter() - t0)
        out["cases"][name] = {"s": best, "work": work}
    print(json.dumps(out))


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3, help="take the best of N runs")
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.worker:
        run_worker(args.repeat)
        return 0

    results = {}
    for backend in ("cython", "python"):
        env = dict(os.environ, DNNSPLIT_BACKEND=backend)
        proc = subprocess.run(
            [sys.executable, __file__, "--worker", "--repeat", str(args.repeat)],
            env=env,
            capture_output=True,
            text=True,
        )
        if proc.returncode != 0:
            print(f"{backend}: failed\n{proc.stderr}", file=sys.stderr)
            continue
        rec = json.loads(proc.stdout.strip().split("\n")[-1])
        assert rec["backend"] == backend, rec
        results[backend] = rec["cases"]

    if set(results) != {"cython", "python"}:
        return 1
    width = max(len(k) for k in results["cython"])
    print(f"{'case':<{width}}  {'cython':>9}  {'python':>9}  {'speedup':>7}")
    for name in results["cython"]:
        cy = results["cython"][name]["s"]
        py = results["python"][name]["s"]
        print(f"{name:<{width}}  {cy:>8.3f}s  {py:>8.3f}s  {py / cy:>6.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
