"""Command-line front end.

Subcommands:
  gen-scenario   generate a random instance and write it as JSON
  solve          build and solve the joint service formulation (exact or relaxed)
  route          run a routing policy and write the route plan as JSON
  simulate       replay a route plan through the event simulator
  experiment     run a seeded sweep and write one CSV/JSON row per run
  verify         run the invariant suites; nonzero exit on any failure

Instances are either loaded (--scenario FILE) or generated on the fly
from --nodes/--jobs/--gamma/--seed, which makes every subcommand usable
standalone in scripts.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import policies
from .experiment import (
    ALGORITHMS,
    ExperimentConfig,
    run_experiment,
    worker_count,
    write_csv,
)
from .formulations import build_service_ilp, extract_path, service_objective_s
from .linprog import SolveStatus, solve_ilp, solve_lp
from .policies import RoutePlan, SizeLimit
from .verify import SUITES, run_suites
from .workload import Scenario, generate_scenario

POLICIES = ("greedy", "nfs", "ss", "sw", "opt", "baseline")


def _add_instance_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", metavar="FILE", help="instance JSON to load")
    p.add_argument("--nodes", type=int, default=15, help="nodes when generating")
    p.add_argument("--jobs", type=int, default=3, help="jobs when generating")
    p.add_argument("--gamma", type=float, default=1.0, help="link-rate scale")
    p.add_argument("--seed", type=int, default=0, help="generator seed")


def _load_scenario(args) -> Scenario:
    if args.scenario:
        with open(args.scenario, encoding="utf-8") as fh:
            return Scenario.from_json(json.load(fh))
    return generate_scenario(args.nodes, args.jobs, args.gamma, seed=args.seed)


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _dump(obj: dict, out: str | None) -> None:
    _emit(json.dumps(obj, indent=2) + "\n", out)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_gen_scenario(args) -> int:
    scenario = _load_scenario(args)
    _dump(scenario.to_json(), args.out)
    return 0


def cmd_solve(args) -> int:
    scenario = _load_scenario(args)
    relax = args.formulation == "lp-relax"
    lp, vi = build_service_ilp(
        scenario,
        budgets=args.budgets == "on",
        delta_s=args.delta,
        relax=relax,
    )
    if relax:
        sol = solve_lp(lp)
    else:
        sol = solve_ilp(lp, time_limit_s=args.time_limit_ms / 1e3)
    report: dict = {
        "formulation": args.formulation,
        "status": sol.status.value,
        "n_rows": lp.n_rows,
        "n_cols": lp.n_vars,
        "iterations": sol.iterations,
        "nodes": sol.nodes,
    }
    if sol.objective is not None:
        report["objective_s"] = sol.objective
        if args.delta:
            report["service_total_s"] = service_objective_s(vi, scenario, sol.x)
    if sol.status == SolveStatus.TIME_LIMIT:
        report["best_bound"] = sol.best_bound
        report["gap"] = sol.gap
    if sol.x is not None and sol.status == SolveStatus.OPTIMAL:
        frac = np.abs(sol.x - np.round(sol.x))
        report["integral"] = bool(frac.max(initial=0.0) <= 1e-6)
        if report["integral"]:
            routes = []
            for j, job in enumerate(scenario.jobs):
                path = extract_path(vi, sol.x, job.src, job.dst, job=j)
                routes.append(
                    {
                        "job": job.id,
                        "compute": {
                            str(layer): idx
                            for kind, layer, idx in path.steps
                            if kind == "cross"
                        },
                        "links": [
                            idx for kind, _, idx in path.steps if kind == "intra"
                        ],
                    }
                )
            report["routes"] = routes
    _dump(report, args.out)
    return 0 if sol.status in (SolveStatus.OPTIMAL, SolveStatus.TIME_LIMIT) else 1


def cmd_route(args) -> int:
    scenario = _load_scenario(args)
    try:
        if args.policy == "greedy":
            plan = policies.greedy_route(scenario)
        elif args.policy == "nfs":
            plan = policies.nfs_route(scenario)
        elif args.policy == "ss":
            plan = policies.ss_route(scenario)
        elif args.policy == "sw":
            plan = policies.sw_route(scenario)
        elif args.policy == "opt":
            plan = policies.brute_force_opt(scenario)
        else:
            plan = _baseline_plan(scenario)
    except SizeLimit as exc:
        print(f"error: instance too large for exhaustive search: {exc}", file=sys.stderr)
        return 1
    policies.attach_actual(scenario, plan)
    obj = plan.to_json()
    obj["c_max_fict_s"] = plan.c_max_fict_s
    obj["c_max_actual_s"] = plan.c_max_actual_s
    _dump(obj, args.out)
    return 0


def _baseline_plan(scenario: Scenario) -> RoutePlan:
    from .formulations import assignment_baseline_route
    from .policies import _finalize

    ordered = [
        (job, assignment_baseline_route(scenario.network, job).path)
        for job in scenario.jobs
    ]
    return _finalize(scenario, "baseline", ordered)


def cmd_simulate(args) -> int:
    scenario = _load_scenario(args)
    with open(args.plan, encoding="utf-8") as fh:
        plan = RoutePlan.from_json(scenario, json.load(fh))
    log = policies.attach_actual(scenario, plan)
    if args.events:
        with open(args.events, "w", encoding="utf-8") as fh:
            log.to_csv(fh)
    _dump(
        {
            "policy": plan.policy,
            "completions_s": {e.job.id: e.c_actual_s for e in plan.entries},
            "c_max_actual_s": plan.c_max_actual_s,
            "events": len(log.rows),
        },
        args.out,
    )
    return 0


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.split(",") if t)


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t)


def cmd_experiment(args) -> int:
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            cfg = ExperimentConfig.from_json(json.load(fh))
    else:
        cfg = ExperimentConfig(
            n_list=_int_list(args.nodes),
            j_list=_int_list(args.jobs),
            gamma_list=_float_list(args.gamma),
            instances=args.instances,
            seed=args.seed,
            algorithms=tuple(args.algorithms.split(",")),
            time_limit_s=args.time_limit_ms / 1e3,
            budgets=args.budgets == "on",
            delta_s=args.delta,
            measure_runtime=args.measure_runtime,
        )
    records = run_experiment(cfg, workers=args.workers)
    if args.format == "json":
        _emit(json.dumps(records, indent=2) + "\n", args.out)
    elif args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            write_csv(records, fh)
    else:
        write_csv(records, sys.stdout)
    return 0


def cmd_verify(args) -> int:
    names = list(SUITES) if args.suite == "all" else args.suite.split(",")
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        print(f"error: unknown suite(s) {unknown}; have {list(SUITES)}", file=sys.stderr)
        return 2
    results = run_suites(names, scale=args.scale)
    ok = True
    for res in results:
        print(res.line())
        ok = ok and res.ok
    return 0 if ok else 1


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="dnnsplit",
        description="Split DNN inference jobs across a computing network.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-scenario", help="generate an instance as JSON")
    _add_instance_flags(p)
    p.add_argument("--out", metavar="FILE")
    p.set_defaults(fn=cmd_gen_scenario)

    p = sub.add_parser("solve", help="solve the joint service formulation")
    _add_instance_flags(p)
    p.add_argument(
        "--formulation",
        choices=("service-ilp", "lp-relax"),
        default="service-ilp",
    )
    p.add_argument("--budgets", choices=("on", "off"), default="on")
    p.add_argument("--delta", type=float, default=1e-6, help="anti-cycle cost per edge")
    p.add_argument("--time-limit-ms", type=int, default=10_000)
    p.add_argument("--out", metavar="FILE")
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("route", help="run a routing policy")
    _add_instance_flags(p)
    p.add_argument("--policy", choices=POLICIES, required=True)
    p.add_argument("--out", metavar="FILE")
    p.set_defaults(fn=cmd_route)

    p = sub.add_parser("simulate", help="replay a route plan")
    _add_instance_flags(p)
    p.add_argument("--plan", metavar="FILE", required=True, help="route plan JSON")
    p.add_argument("--events", metavar="FILE", help="write the event log CSV here")
    p.add_argument("--out", metavar="FILE")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("experiment", help="run a seeded sweep")
    p.add_argument("--config", metavar="FILE", help="ExperimentConfig JSON")
    p.add_argument("--nodes", default="15", help="comma-separated sweep, e.g. 10,15")
    p.add_argument("--jobs", default="3", help="comma-separated sweep")
    p.add_argument("--gamma", default="0.2,2.0", help="comma-separated sweep")
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--algorithms",
        default="ilp,lp-relax,baseline,greedy,nfs",
        help=f"comma-separated from {','.join(ALGORITHMS)}",
    )
    p.add_argument("--time-limit-ms", type=int, default=10_000)
    p.add_argument("--budgets", choices=("on", "off"), default="on")
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument(
        "--measure-runtime",
        action="store_true",
        help="fill runtime_ms (off by default: timing breaks byte-identical output)",
    )
    p.add_argument(
        "--workers",
        type=int,
        default=None,
        help=f"worker processes (default: DNNSPLIT_THREADS or CPU count, now {worker_count()})",
    )
    p.add_argument("--out", metavar="FILE")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(fn=cmd_experiment)

    p = sub.add_parser("verify", help="run invariant suites")
    p.add_argument(
        "--suite",
        default="all",
        help=f"comma-separated from {','.join(SUITES)} or 'all'",
    )
    p.add_argument(
        "--scale",
        type=float,
        default=1.0,
        help="multiply default case counts (0.1 = smoke run)",
    )
    p.set_defaults(fn=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
