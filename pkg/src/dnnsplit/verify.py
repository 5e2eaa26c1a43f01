"""Invariant suites: randomized checks of the guarantees this package
claims, shared by the `verify` CLI subcommand and the test suite.

Each suite returns a SuiteResult; a suite "passes" when failures == 0
(plus any suite-specific statistic its caller wants to threshold).
All randomness is keyed by integer tuples through SeedSequence, so
every run of a suite with the same arguments sees the same instances.
"""

from __future__ import annotations

import inspect
import itertools
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import policies, sim, topology
from .formulations import (
    QueueSnapshot,
    build_single_job_lp,
    extract_path,
    single_job_blocks,
)
from .linprog import SolveStatus, check_totally_unimodular, solve_lp
from .policies import BruteForceLimits, SizeLimit
from .topology import LinkSpec, NodeSpec, PhysicalNetwork, is_simple_in_physical
from .workload import DnnModel, Job, Scenario, generate_scenario


@dataclass
class SuiteResult:
    name: str
    cases: int = 0
    failures: int = 0
    skipped: int = 0
    elapsed_s: float = 0.0
    first_failure: str | None = None
    stats: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.failures == 0

    def fail(self, case: str) -> None:
        self.failures += 1
        if self.first_failure is None:
            self.first_failure = case

    def line(self) -> str:
        mark = "PASS" if self.ok else "FAIL"
        extra = "".join(f" {k}={v:.6g}" for k, v in self.stats.items())
        msg = f"[{mark}] {self.name}: {self.cases - self.failures}/{self.cases} ok"
        if self.skipped:
            msg += f" ({self.skipped} skipped)"
        msg += f"{extra} [{self.elapsed_s:.1f}s]"
        if self.first_failure:
            msg += f"\n       first failure: {self.first_failure}"
        return msg


def _rng(key) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(key)))


# ---------------------------------------------------------------------------
# Instance generators


GAMMAS = (0.2, 0.5, 1.0, 2.0)


def random_queues(net: PhysicalNetwork, model: DnnModel, rng) -> QueueSnapshot:
    """Backlogs scaled to the workload: up to ~2 jobs' worth of compute
    on half the nodes, a few tensors' worth on half the links."""
    q = QueueSnapshot.zeros(net)
    total_c = sum(model.c_mm)
    max_d = max(model.d_bits(l) for l in range(model.n_layers + 1))
    for u in net.compute_nodes():
        if rng.random() < 0.5:
            q.node_mm[u] += float(rng.uniform(0.0, 2.0 * total_c))
    for e in range(net.n_links):
        if rng.random() < 0.5:
            q.link_bits[e] += float(rng.uniform(0.0, 4.0 * max_d))
    return q


def single_job_instance(seed: int, idx: int):
    """One random deployed network with one job and random backlogs."""
    rng = _rng((seed, idx))
    n = int(rng.integers(5, 31))
    gamma = float(rng.choice(GAMMAS))
    scn = generate_scenario(n, 1, gamma, seed=int(rng.integers(0, 2**62)))
    queues = random_queues(scn.network, scn.jobs[0].model, rng)
    return scn, queues


def _tiny_model(rng, jid: int, max_layers: int) -> DnnModel:
    """Few-layer model with per-layer magnitudes drawn from the same
    ranges the builtin model tables span."""
    lj = int(rng.integers(1, max_layers + 1))
    return DnnModel(
        name=f"tiny{jid}",
        d_kb=tuple(float(rng.uniform(4.0, 620.0)) for _ in range(lj + 1)),
        c_mm=tuple(float(rng.uniform(50.0, 400.0)) for _ in range(lj)),
        m_kb=tuple(float(rng.uniform(1.0, 100.0)) for _ in range(lj)),
    )


def tiny_scenario(
    seed: int,
    idx: int,
    *,
    identical_rates: bool = False,
    zero_delay: bool = False,
    max_jobs: int = 3,
    limits: BruteForceLimits | None = None,
) -> Scenario:
    """Small instance the brute-force oracle can afford; resamples until
    the enumeration fits the given limits.

    Everything but the size follows the full-scale generator's
    marginals: device compute rates from the builtin hardware table,
    per-direction link rates from the gamma rate classes, job
    endpoints uniform (src == dst allowed).  Five devices in close
    range (near-complete connectivity) with one- or two-layer models.
    """
    from .workload import RATE_STEP_MBPS, builtin_node_types
    from . import units

    limits = limits or BruteForceLimits()
    type_rates = [t.mu_mm_s for t in builtin_node_types().values()]
    for attempt in itertools.count():
        rng = _rng((seed, idx, attempt))
        n = 5
        base = topology.generate_random_geometric(
            n, side_m=10.0, range_m=9.0, seed=int(rng.integers(0, 2**62))
        )
        if identical_rates:
            mu = float(rng.choice(type_rates))
            node_rates = [mu] * n
        else:
            node_rates = [float(rng.choice(type_rates)) for _ in range(n)]
        gamma = float(rng.choice(GAMMAS))
        nodes = tuple(
            replace(nd, mu_mm_s=r) for nd, r in zip(base.nodes, node_rates)
        )
        links = tuple(
            replace(
                lk,
                mu_bps=units.mbps_to_bps(
                    float(rng.integers(1, 6)) * gamma * RATE_STEP_MBPS
                ),
            )
            for lk in base.links
        )
        net = PhysicalNetwork(nodes=nodes, links=links)
        n_jobs = int(rng.integers(2, max_jobs + 1))
        max_l = 2 if n_jobs == 2 else 1
        jobs = tuple(
            Job(
                id=j,
                model=_tiny_model(rng, j, max_l),
                src=int(rng.integers(0, n)),
                dst=int(rng.integers(0, n)),
            )
            for j in range(n_jobs)
        )
        scn = Scenario(network=net, jobs=jobs, gamma=gamma, seed=seed)
        try:
            cand = [
                policies._candidate_paths(net, j, limits, zero_delay) for j in jobs
            ]
        except SizeLimit:
            continue
        n_combo = int(np.prod([len(c) for c in cand]))
        n_orders = int(np.prod(range(1, n_jobs + 1)))
        cap = limits.max_sim_evals if zero_delay else limits.max_combos
        if n_combo * n_orders > cap:
            continue
        return scn


def dominance_instance(seed: int, idx: int) -> Scenario:
    rng = _rng((seed, idx))
    n = int(rng.integers(5, 10))
    n_jobs = int(rng.integers(2, 5))
    gamma = float(rng.choice(GAMMAS))
    return generate_scenario(n, n_jobs, gamma, seed=int(rng.integers(0, 2**62)))


# ---------------------------------------------------------------------------
# Suites


def suite_integrality(cases: int = 1000, seed: int = 20260801) -> SuiteResult:
    """Relaxed single-job programs must come back 0/1 at a vertex."""
    res = SuiteResult("integrality")
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(cases):
        res.cases += 1
        scn, queues = single_job_instance(seed, i)
        job = scn.jobs[0]
        lp, vi = build_single_job_lp(scn.network, job, queues, relax=True)
        sol = solve_lp(lp)
        if sol.status != SolveStatus.OPTIMAL:
            res.fail(f"case {i}: solver status {sol.status}")
            continue
        frac = float(np.abs(sol.x - np.round(sol.x)).max())
        worst = max(worst, frac)
        if frac > 1e-6:
            res.fail(f"case {i}: fractional value off by {frac:.3g}")
            continue
        try:
            extract_path(vi, sol.x, job.src, job.dst)
        except Exception as exc:  # noqa: BLE001 - counterexamples wanted verbatim
            res.fail(f"case {i}: path extraction: {exc}")
    res.stats["max_offset"] = worst
    res.elapsed_s = time.perf_counter() - t0
    return res


def _complete_net(n: int) -> PhysicalNetwork:
    nodes = tuple(NodeSpec(mu_mm_s=1.0) for _ in range(n))
    links = tuple(
        LinkSpec(u=a, v=b, mu_bps=1.0)
        for a in range(n)
        for b in range(n)
        if a != b
    )
    return PhysicalNetwork(nodes=nodes, links=links)


def suite_tu(
    exhaustive_order: int = 4,
    sample_orders: tuple[int, ...] = (5, 6, 7),
    samples_per_order: int = 5000,
    seed: int = 7,
) -> SuiteResult:
    """Constraint blocks of every ≤4-node, ≤2-layer single-job program.

    Any such program's matrix is (up to permutation) a submatrix of the
    complete-digraph case with every node compute-capable — missing
    links or compute-incapable nodes only delete columns/rows — and
    total unimodularity is inherited by submatrices.  Checking the
    complete digraphs for n in {2,3,4}, layers in {1,2} therefore
    covers the whole family.
    """
    res = SuiteResult("tu")
    t0 = time.perf_counter()
    for n in (2, 3, 4):
        net = _complete_net(n)
        for n_layers in (1, 2):
            a1, a2, full = single_job_blocks(net, n_layers)
            for tag, mat in (("[A1;A2]", np.vstack([a1, a2])), ("full", full)):
                res.cases += 1
                verdict = check_totally_unimodular(
                    mat,
                    exhaustive_order=exhaustive_order,
                    sample_orders=sample_orders,
                    samples_per_order=samples_per_order,
                    seed=seed,
                )
                if verdict.violated:
                    res.fail(
                        f"n={n} L={n_layers} {tag}: det {verdict.witness_det} at "
                        f"rows {verdict.witness_rows} cols {verdict.witness_cols}"
                    )
    res.elapsed_s = time.perf_counter() - t0
    return res


def suite_objective_match(cases: int = 500, seed: int = 20260802) -> SuiteResult:
    """Single-job LP objective == closed-form completion on simple paths."""
    res = SuiteResult("objective-match")
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(cases):
        res.cases += 1
        scn, queues = single_job_instance(seed, i)
        job = scn.jobs[0]
        net = scn.network
        lp, vi = build_single_job_lp(net, job, queues, relax=True)
        sol = solve_lp(lp)
        if sol.status != SolveStatus.OPTIMAL:
            res.fail(f"case {i}: solver status {sol.status}")
            continue
        path = extract_path(vi, sol.x, job.src, job.dst)
        if not is_simple_in_physical(net, path):
            res.skipped += 1
            continue
        service, wait = sim.evaluate_path(net, job.model, path, queues)
        diff = abs(sol.objective - (service + wait))
        worst = max(worst, diff)
        if diff > 1e-9:
            res.fail(f"case {i}: |LP - evaluator| = {diff:.3g} s")
    res.stats["max_diff_s"] = worst
    res.elapsed_s = time.perf_counter() - t0
    return res


def suite_greedy_vs_opt(cases: int = 200, seed: int = 20260803) -> SuiteResult:
    """Greedy against the exhaustive fictitious-system optimum."""
    res = SuiteResult("greedy-vs-opt")
    t0 = time.perf_counter()
    gaps = []
    for i in range(cases):
        res.cases += 1
        scn = tiny_scenario(seed, i)
        try:
            opt = policies.brute_force_opt(scn, system="fictitious")
        except SizeLimit as exc:
            res.fail(f"case {i}: oracle refused sized-down instance: {exc}")
            continue
        grd = policies.greedy_route(scn)
        c_grd, c_opt = grd.c_max_fict_s, opt.c_max_fict_s
        if c_grd < c_opt - 1e-9:
            res.fail(f"case {i}: greedy {c_grd} beat exhaustive {c_opt}")
            continue
        gaps.append((c_grd - c_opt) / c_opt)
    if gaps:
        res.stats["mean_gap"] = float(np.mean(gaps))
        res.stats["max_gap"] = float(np.max(gaps))
    res.elapsed_s = time.perf_counter() - t0
    return res


def suite_corollary_bound(cases: int = 100, seed: int = 20260804) -> SuiteResult:
    """Zero network delay + identical node rates: greedy's actual
    makespan within (2 - 1/V) of the actual-system optimum."""
    res = SuiteResult("corollary-bound")
    t0 = time.perf_counter()
    ratios = []
    for i in range(cases):
        res.cases += 1
        scn = tiny_scenario(seed, i, identical_rates=True, zero_delay=True)
        grd = policies.greedy_route(scn, zero_delay=True)
        policies.attach_actual(scn, grd, zero_delay=True)
        try:
            opt = policies.brute_force_opt(scn, system="actual", zero_delay=True)
        except SizeLimit as exc:
            res.fail(f"case {i}: oracle refused sized-down instance: {exc}")
            continue
        v_plus = len(scn.network.compute_nodes())
        bound = (2.0 - 1.0 / v_plus) * opt.c_max_actual_s + 1e-9
        ratios.append(grd.c_max_actual_s / opt.c_max_actual_s)
        if grd.c_max_actual_s > bound:
            res.fail(
                f"case {i}: actual makespan {grd.c_max_actual_s:.6g} > "
                f"(2-1/{v_plus}) * {opt.c_max_actual_s:.6g}"
            )
    if ratios:
        res.stats["max_ratio"] = float(np.max(ratios))
    res.elapsed_s = time.perf_counter() - t0
    return res


def proof_chain_instance(seed: int, idx: int) -> tuple[Scenario, policies.RoutePlan]:
    """Connected instance, all endpoints distinct, greedy paths simple."""
    for attempt in itertools.count():
        rng = _rng((seed, idx, attempt))
        n = int(rng.integers(5, 11))
        n_jobs = int(rng.integers(2, 6))
        gamma = float(rng.choice(GAMMAS))
        scn = generate_scenario(n, n_jobs, gamma, seed=int(rng.integers(0, 2**62)))
        if any(j.src == j.dst for j in scn.jobs):
            continue
        plan = policies.greedy_route(scn)
        if all(e.simple for e in plan.entries):
            return scn, plan


def suite_proof_chain(cases: int = 100, seed: int = 20260805) -> SuiteResult:
    """Last greedy job's fictitious completion against the chained
    heterogeneity bound built from everyone's best-case service."""
    res = SuiteResult("proof-chain")
    t0 = time.perf_counter()
    margins = []
    for i in range(cases):
        res.cases += 1
        scn, plan = proof_chain_instance(seed, i)
        rep = policies.compute_alpha(scn)
        comp = rep.n_compute_nodes + rep.n_links
        s_ss = {
            job.id: policies.shortest_service_route(scn, job)[1] for job in scn.jobs
        }
        order = [e.job.id for e in plan.entries]
        rhs = rep.alpha3 * (
            sum(s_ss[j] for j in order[:-1]) / comp + s_ss[order[-1]]
        )
        lhs = plan.entries[-1].c_fict_s
        if lhs > rhs + 1e-9:
            res.fail(f"case {i}: C_fict(last) {lhs:.6g} > bound {rhs:.6g}")
        elif np.isfinite(rhs):
            margins.append(lhs / rhs)
    if margins:
        res.stats["max_use"] = float(np.max(margins))
    res.elapsed_s = time.perf_counter() - t0
    return res


def suite_dominance(cases: int = 500, seed: int = 20260806) -> SuiteResult:
    """Actual completions never exceed fictitious ones, any policy."""
    res = SuiteResult("dominance")
    t0 = time.perf_counter()
    runners = {
        "greedy": policies.greedy_route,
        "nfs": policies.nfs_route,
        "ss": policies.ss_route,
        "sw": policies.sw_route,
    }
    worst = -np.inf
    for i in range(cases):
        res.cases += 1
        scn = dominance_instance(seed, i)
        bad = None
        for name, run in runners.items():
            plan = run(scn)
            policies.attach_actual(scn, plan)
            for e in plan.entries:
                worst = max(worst, e.c_actual_s - e.c_fict_s)
                if e.c_actual_s > e.c_fict_s + 1e-9:
                    bad = (
                        f"case {i} policy {name} job {e.job.id}: actual "
                        f"{e.c_actual_s:.9g} > fictitious {e.c_fict_s:.9g}"
                    )
                    break
            if bad:
                break
        if bad:
            res.fail(bad)
    res.stats["worst_slack_s"] = worst
    res.elapsed_s = time.perf_counter() - t0
    return res


SUITES = {
    "integrality": suite_integrality,
    "tu": suite_tu,
    "objective-match": suite_objective_match,
    "greedy-vs-opt": suite_greedy_vs_opt,
    "corollary": suite_corollary_bound,
    "proof-chain": suite_proof_chain,
    "dominance": suite_dominance,
}


def run_suites(names, scale: float = 1.0) -> list[SuiteResult]:
    """Run the named suites, scaling case counts by `scale` (>= smoke)."""
    out = []
    for name in names:
        fn = SUITES[name]
        if name == "tu":
            out.append(fn())
        else:
            default = inspect.signature(fn).parameters["cases"].default
            out.append(fn(cases=max(1, int(default * scale))))
    return out
