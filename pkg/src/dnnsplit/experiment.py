"""Seeded experiment sweeps over instance grids, one CSV row per run.

A sweep is a grid of cells (n, jobs, gamma) x instances-per-cell.  Every
instance is generated from a seed derived deterministically from the
master seed and the cell coordinates, each requested algorithm runs on
it, and the outcome lands in one ResultRow.  Failures (infeasible
instance, solver time limit, size limits of the exhaustive search)
become notes on the row; they never abort the sweep.

Rows come back in grid order no matter how many workers ran them, and
timing columns stay empty unless explicitly requested, so a finished CSV
is byte-identical across runs of the same config.
"""

from __future__ import annotations

import concurrent.futures
import csv
import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import policies, sim
from .formulations import (
    InfeasibleTopology,
    assignment_baseline_route,
    build_service_ilp,
    extract_path,
)
from .linprog import SolveStatus, solve_ilp, solve_lp
from .policies import BruteForceLimits, SizeLimit
from .workload import Scenario, generate_scenario

ALGORITHMS = ("ilp", "lp-relax", "baseline", "greedy", "nfs", "ss", "sw", "opt")
DEFAULT_ALGORITHMS = ("ilp", "lp-relax", "baseline", "greedy", "nfs")

CSV_FIELDS = (
    "instance_id",
    "seed",
    "n",
    "jobs",
    "gamma",
    "algorithm",
    "objective_s",
    "c_max_fict_s",
    "c_max_actual_s",
    "runtime_ms",
    "integral",
    "integrality_gap",
    "relative_gap_pct",
    "notes",
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Grid definition plus solver knobs for one sweep."""

    n_list: tuple[int, ...] = (15,)
    j_list: tuple[int, ...] = (3,)
    gamma_list: tuple[float, ...] = (0.2, 2.0)
    instances: int = 20
    seed: int = 0
    algorithms: tuple[str, ...] = DEFAULT_ALGORITHMS
    time_limit_s: float = 10.0
    budgets: bool = True
    # 0 keeps objectives exactly the modeled service time; a positive
    # value adds the per-edge anti-cycle penalty to both ILP and LP so
    # their ratio stays well-defined.
    delta_s: float = 0.0
    measure_runtime: bool = False
    opt_limits: BruteForceLimits = field(default_factory=BruteForceLimits)

    def __post_init__(self):
        if not (self.n_list and self.j_list and self.gamma_list):
            raise ValueError("sweep lists must be non-empty")
        if self.instances < 1:
            raise ValueError("instances must be >= 1")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ValueError(f"unknown algorithms: {sorted(unknown)}")

    def to_json(self) -> dict:
        return {
            "n": list(self.n_list),
            "jobs": list(self.j_list),
            "gamma": list(self.gamma_list),
            "instances": self.instances,
            "seed": self.seed,
            "algorithms": list(self.algorithms),
            "time_limit_s": self.time_limit_s,
            "budgets": self.budgets,
            "delta_s": self.delta_s,
            "measure_runtime": self.measure_runtime,
        }

    @staticmethod
    def from_json(obj: dict) -> "ExperimentConfig":
        cfg = ExperimentConfig()
        return replace(
            cfg,
            n_list=tuple(obj.get("n", cfg.n_list)),
            j_list=tuple(obj.get("jobs", cfg.j_list)),
            gamma_list=tuple(obj.get("gamma", cfg.gamma_list)),
            instances=int(obj.get("instances", cfg.instances)),
            seed=int(obj.get("seed", cfg.seed)),
            algorithms=tuple(obj.get("algorithms", cfg.algorithms)),
            time_limit_s=float(obj.get("time_limit_s", cfg.time_limit_s)),
            budgets=bool(obj.get("budgets", cfg.budgets)),
            delta_s=float(obj.get("delta_s", cfg.delta_s)),
            measure_runtime=bool(obj.get("measure_runtime", cfg.measure_runtime)),
        )

    def cells(self) -> list[tuple[int, int, float]]:
        return [
            (n, j, g)
            for n in self.n_list
            for j in self.j_list
            for g in self.gamma_list
        ]


@dataclass
class ResultRow:
    instance_id: str
    seed: int
    n: int
    jobs: int
    gamma: float
    algorithm: str
    objective_s: float | None = None
    c_max_fict_s: float | None = None
    c_max_actual_s: float | None = None
    runtime_ms: float | None = None
    integral: bool | None = None
    integrality_gap: float | None = None
    relative_gap_pct: float | None = None
    notes: str = ""

    def as_record(self) -> dict[str, str]:
        def num(x):
            if x is None:
                return ""
            return format(float(x), ".10g")

        return {
            "instance_id": self.instance_id,
            "seed": str(self.seed),
            "n": str(self.n),
            "jobs": str(self.jobs),
            "gamma": format(self.gamma, "g"),
            "algorithm": self.algorithm,
            "objective_s": num(self.objective_s),
            "c_max_fict_s": num(self.c_max_fict_s),
            "c_max_actual_s": num(self.c_max_actual_s),
            "runtime_ms": num(self.runtime_ms),
            "integral": "" if self.integral is None else str(int(self.integral)),
            "integrality_gap": num(self.integrality_gap),
            "relative_gap_pct": num(self.relative_gap_pct),
            "notes": self.notes,
        }


def instance_seed(master: int, cell_idx: int, instance_idx: int) -> int:
    """Stable per-instance seed derived from the master seed."""
    ss = np.random.SeedSequence([int(master), int(cell_idx), int(instance_idx)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


# ---------------------------------------------------------------------------
# Per-algorithm runners.  Each returns (objective, fict, actual, integral,
# notes); exceptions are caught by the instance driver.


def _clock(enabled: bool):
    if not enabled:
        return lambda: None
    import time

    t0 = time.perf_counter()
    return lambda: (time.perf_counter() - t0) * 1e3


def _plan_row(row: ResultRow, scenario: Scenario, plan: policies.RoutePlan) -> None:
    row.objective_s = plan.c_max_fict_s
    row.c_max_fict_s = plan.c_max_fict_s
    policies.attach_actual(scenario, plan)
    row.c_max_actual_s = plan.c_max_actual_s


def _eval_routes(row: ResultRow, scenario: Scenario, routed) -> None:
    """Makespan of fixed routes with priorities in listed order."""
    net = scenario.network
    fict = sim.fictitious_completion(net, routed)
    row.c_max_fict_s = max(fict)
    done, _ = sim.simulate_actual(net, routed)
    row.c_max_actual_s = max(done.values())


def _run_ilp(row: ResultRow, scenario: Scenario, cfg: ExperimentConfig, relax: bool):
    lp, vi = build_service_ilp(
        scenario, budgets=cfg.budgets, delta_s=cfg.delta_s, relax=relax
    )
    if relax:
        sol = solve_lp(lp)
    else:
        sol = solve_ilp(lp, time_limit_s=cfg.time_limit_s)
    if sol.status == SolveStatus.INFEASIBLE:
        row.notes = "infeasible"
        return sol
    if sol.status == SolveStatus.TIME_LIMIT:
        row.notes = "time_limit"
        if sol.objective is not None:  # incumbent found before the limit
            row.objective_s = sol.objective
        return sol
    if sol.status != SolveStatus.OPTIMAL:
        row.notes = sol.status.value
        return sol
    row.objective_s = sol.objective
    frac = np.abs(sol.x - np.round(sol.x))
    row.integral = bool(frac.max(initial=0.0) <= 1e-6)
    if row.integral:
        try:
            routed = [
                (job, extract_path(vi, sol.x, job.src, job.dst, job=j))
                for j, job in enumerate(scenario.jobs)
            ]
            _eval_routes(row, scenario, routed)
        except (InfeasibleTopology, ValueError) as exc:
            row.notes = f"path_extraction: {exc}"
    return sol


def _run_baseline(row: ResultRow, scenario: Scenario) -> None:
    routes = [assignment_baseline_route(scenario.network, job) for job in scenario.jobs]
    row.objective_s = sum(r.service_s for r in routes)
    row.integral = True
    routed = [(job, r.path) for job, r in zip(scenario.jobs, routes)]
    _eval_routes(row, scenario, routed)


def _run_opt(row: ResultRow, scenario: Scenario, limits: BruteForceLimits) -> None:
    try:
        plan = policies.brute_force_opt(scenario, limits=limits)
    except SizeLimit as exc:
        row.notes = f"skipped: {exc}"
        return
    _plan_row(row, scenario, plan)


def run_instance(
    scenario: Scenario, cfg: ExperimentConfig, instance_id: str, seed: int
) -> list[ResultRow]:
    """All requested algorithms on one instance; one row each."""
    rows: list[ResultRow] = []
    by_name: dict[str, ResultRow] = {}
    for alg in cfg.algorithms:
        row = ResultRow(
            instance_id=instance_id,
            seed=seed,
            n=scenario.network.n_nodes,
            jobs=len(scenario.jobs),
            gamma=scenario.gamma,
            algorithm=alg,
        )
        elapsed = _clock(cfg.measure_runtime)
        try:
            if alg == "ilp":
                _run_ilp(row, scenario, cfg, relax=False)
            elif alg == "lp-relax":
                _run_ilp(row, scenario, cfg, relax=True)
            elif alg == "baseline":
                _run_baseline(row, scenario)
            elif alg == "greedy":
                _plan_row(row, scenario, policies.greedy_route(scenario))
            elif alg == "nfs":
                _plan_row(row, scenario, policies.nfs_route(scenario))
            elif alg == "ss":
                _plan_row(row, scenario, policies.ss_route(scenario))
            elif alg == "sw":
                _plan_row(row, scenario, policies.sw_route(scenario))
            elif alg == "opt":
                _run_opt(row, scenario, cfg.opt_limits)
        except InfeasibleTopology as exc:
            row.notes = f"infeasible: {exc}"
        except Exception as exc:  # noqa: BLE001 - a sweep must survive any row
            row.notes = f"error: {type(exc).__name__}: {exc}"
        row.runtime_ms = elapsed()
        rows.append(row)
        by_name[alg] = row

    def solved(r: ResultRow | None) -> bool:
        # a path-extraction note still leaves a proven optimum behind
        return (
            r is not None
            and r.objective_s is not None
            and (r.notes == "" or r.notes.startswith("path_extraction"))
        )

    ilp = by_name.get("ilp")
    rel = by_name.get("lp-relax")
    if solved(ilp) and solved(rel) and rel.objective_s > 0:
        gap = ilp.objective_s / rel.objective_s
        ilp.integrality_gap = gap
        rel.integrality_gap = gap
    base = by_name.get("baseline")
    if solved(ilp) and solved(base) and ilp.objective_s > 0:
        base.relative_gap_pct = (
            (base.objective_s - ilp.objective_s) / ilp.objective_s * 100.0
        )
    return rows


def _worker(args) -> tuple[int, list[dict]]:
    task_idx, n, j, gamma, cell_idx, inst_idx, cfg_json, measure, limits = args
    cfg = ExperimentConfig.from_json(cfg_json)
    cfg = replace(cfg, measure_runtime=measure, opt_limits=limits)
    seed = instance_seed(cfg.seed, cell_idx, inst_idx)
    instance_id = f"n{n}-j{j}-g{gamma:g}-i{inst_idx:03d}"
    try:
        scenario = generate_scenario(n, j, gamma, seed=seed)
        rows = run_instance(scenario, cfg, instance_id, seed)
    except Exception as exc:  # noqa: BLE001 - report, never abort the sweep
        rows = [
            ResultRow(
                instance_id=instance_id,
                seed=seed,
                n=n,
                jobs=j,
                gamma=gamma,
                algorithm=alg,
                notes=f"error: {type(exc).__name__}: {exc}",
            )
            for alg in cfg.algorithms
        ]
    return task_idx, [r.as_record() for r in rows]


def worker_count() -> int:
    env = os.environ.get("DNNSPLIT_THREADS", "").strip()
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_experiment(cfg: ExperimentConfig, *, workers: int | None = None) -> list[dict]:
    """Run the sweep; returns CSV-ready records in deterministic grid order."""
    tasks = []
    for cell_idx, (n, j, gamma) in enumerate(cfg.cells()):
        for inst_idx in range(cfg.instances):
            tasks.append(
                (
                    len(tasks),
                    n,
                    j,
                    gamma,
                    cell_idx,
                    inst_idx,
                    cfg.to_json(),
                    cfg.measure_runtime,
                    cfg.opt_limits,
                )
            )
    nw = workers if workers is not None else worker_count()
    results: dict[int, list[dict]] = {}
    if nw <= 1 or len(tasks) <= 1:
        for t in tasks:
            idx, rows = _worker(t)
            results[idx] = rows
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=nw) as pool:
            for idx, rows in pool.map(_worker, tasks):
                results[idx] = rows
    return [row for idx in sorted(results) for row in results[idx]]


def write_csv(records: list[dict], fh) -> None:
    writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(records)
