"""Routing policies: who goes where, and in what priority order.

All policies return a RoutePlan whose entry order IS the priority
order (index 0 preempts everyone below it).  Fictitious completion
estimates are always recomputed through sim.fictitious_completion so
that numbers coming out of different policies are directly comparable.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field

import numpy as np

from . import sim, topology
from .formulations import (
    InfeasibleTopology,
    QueueSnapshot,
    build_single_job_lp,
    effective_c_mm,
    extract_path,
)
from .linprog import SolveStatus, solve_lp
from .topology import LayeredPath, edge_connectivity, hop_path_extremes, is_simple_in_physical
from .workload import Job, Scenario


class SizeLimit(ValueError):
    """Instance too large for exhaustive search."""


@dataclass
class RouteEntry:
    job: Job
    path: LayeredPath
    c_fict_s: float
    c_actual_s: float | None = None
    simple: bool = True

    def to_json(self, priority: int) -> dict:
        segments, compute = topology.map_path_to_physical(self.path)
        return {
            "job": self.job.id,
            "priority": priority,
            "layered_edges": [list(s) for s in self.path.steps],
            "compute": {str(l): u for l, u in sorted(compute.items())},
            "segments": segments,
            "c_fict_s": self.c_fict_s,
            "c_actual_s": self.c_actual_s,
        }


@dataclass
class RoutePlan:
    policy: str
    entries: list[RouteEntry] = field(default_factory=list)

    def routed(self) -> list[tuple[Job, LayeredPath]]:
        return [(e.job, e.path) for e in self.entries]

    @property
    def c_max_fict_s(self) -> float:
        return max(e.c_fict_s for e in self.entries)

    @property
    def c_max_actual_s(self) -> float | None:
        vals = [e.c_actual_s for e in self.entries]
        return None if any(v is None for v in vals) else max(vals)

    def entry_of(self, job_id: int) -> RouteEntry:
        for e in self.entries:
            if e.job.id == job_id:
                return e
        raise KeyError(job_id)

    def to_json(self) -> dict:
        return {
            "policy": self.policy,
            "entries": [e.to_json(i) for i, e in enumerate(self.entries)],
        }

    @staticmethod
    def from_json(scenario: Scenario, obj: dict) -> "RoutePlan":
        jobs = {j.id: j for j in scenario.jobs}
        entries = []
        for rec in sorted(obj["entries"], key=lambda r: r["priority"]):
            path = LayeredPath(steps=tuple(tuple(s) for s in rec["layered_edges"]))
            entries.append(
                RouteEntry(
                    job=jobs[rec["job"]],
                    path=path,
                    c_fict_s=rec["c_fict_s"],
                    c_actual_s=rec.get("c_actual_s"),
                    simple=is_simple_in_physical(scenario.network, path),
                )
            )
        return RoutePlan(policy=obj.get("policy", "?"), entries=entries)


def _finalize(
    scenario: Scenario,
    policy: str,
    ordered: list[tuple[Job, LayeredPath]],
    *,
    mem_alpha: float | None = None,
    zero_delay: bool = False,
) -> RoutePlan:
    net = scenario.network
    c_fict = sim.fictitious_completion(
        net, ordered, mem_alpha=mem_alpha, zero_delay=zero_delay
    )
    entries = [
        RouteEntry(
            job=job,
            path=path,
            c_fict_s=c,
            simple=is_simple_in_physical(net, path),
        )
        for (job, path), c in zip(ordered, c_fict)
    ]
    return RoutePlan(policy=policy, entries=entries)


def attach_actual(
    scenario: Scenario,
    plan: RoutePlan,
    *,
    mem_alpha: float | None = None,
    zero_delay: bool = False,
) -> sim.EventLog:
    """Simulate the plan and fill in actual completion times."""
    done, log = sim.simulate_actual(
        scenario.network, plan.routed(), mem_alpha=mem_alpha, zero_delay=zero_delay
    )
    for e in plan.entries:
        e.c_actual_s = done[e.job.id]
    return log


# ---------------------------------------------------------------------------
# Greedy priority routing


def greedy_route(
    scenario: Scenario,
    *,
    mem_alpha: float | None = None,
    zero_delay: bool = False,
) -> RoutePlan:
    """Route one job per round: always the one whose best route against
    the current backlogs finishes earliest; it takes the next-highest
    priority and its work is frozen into the queues.

    Each candidate evaluation is one LP relaxation of the single-job
    program (integral by total unimodularity).  Re-solves reuse the
    previous round's basis, which the solver accepts because only the
    costs moved.
    """
    net = scenario.network
    queues = QueueSnapshot.from_network(net)
    remaining = list(scenario.jobs)
    warm: dict[int, object] = {}
    ordered: list[tuple[Job, LayeredPath]] = []
    while remaining:
        best_job = best_sol = best_vi = None
        best_obj = np.inf
        for job in remaining:
            lp, vi = build_single_job_lp(
                net, job, queues, relax=True, mem_alpha=mem_alpha, zero_delay=zero_delay
            )
            sol = solve_lp(lp, warm=warm.get(job.id))
            if sol.status != SolveStatus.OPTIMAL:
                raise RuntimeError(f"job {job.id} routing LP ended {sol.status}")
            warm[job.id] = sol
            if sol.objective < best_obj:
                best_obj = sol.objective
                best_job, best_sol, best_vi = job, sol, vi
        path = extract_path(best_vi, best_sol.x, best_job.src, best_job.dst)
        ordered.append((best_job, path))
        queues.add_path(net, best_job.model, path, mem_alpha=mem_alpha)
        remaining.remove(best_job)
        warm.pop(best_job.id, None)
    return _finalize(scenario, "greedy", ordered, mem_alpha=mem_alpha, zero_delay=zero_delay)


def shortest_service_route(
    scenario: Scenario,
    job: Job,
    *,
    mem_alpha: float | None = None,
    zero_delay: bool = False,
) -> tuple[LayeredPath, float]:
    """Best route for a job alone in an empty system; returns the path
    and its pure service time."""
    net = scenario.network
    lp, vi = build_single_job_lp(
        net, job, QueueSnapshot.zeros(net), relax=True,
        mem_alpha=mem_alpha, zero_delay=zero_delay,
    )
    sol = solve_lp(lp)
    if sol.status != SolveStatus.OPTIMAL:
        raise RuntimeError(f"job {job.id} solo LP ended {sol.status}")
    path = extract_path(vi, sol.x, job.src, job.dst)
    service, _ = sim.evaluate_path(
        net, job.model, path, QueueSnapshot.zeros(net),
        mem_alpha=mem_alpha, zero_delay=zero_delay,
    )
    return path, service


def ss_route(
    scenario: Scenario, *, mem_alpha: float | None = None, zero_delay: bool = False
) -> RoutePlan:
    """Every job takes its empty-system shortest-service route;
    priorities follow job id."""
    ordered = [
        (job, shortest_service_route(scenario, job, mem_alpha=mem_alpha, zero_delay=zero_delay)[0])
        for job in scenario.jobs
    ]
    return _finalize(scenario, "ss", ordered, mem_alpha=mem_alpha, zero_delay=zero_delay)


# ---------------------------------------------------------------------------
# Fastest-node baseline


def _dijkstra(net, weights, src: int) -> tuple[list[float], list[int]]:
    """weights: per-link cost >= 0.  Returns (dist, parent_link)."""
    n = net.n_nodes
    dist = [np.inf] * n
    parent = [-1] * n
    dist[src] = 0.0
    heap = [(0.0, src)]
    seen = [False] * n
    while heap:
        d, u = heapq.heappop(heap)
        if seen[u]:
            continue
        seen[u] = True
        for e in net.out_links(u):
            v = net.links[e].v
            nd = d + weights[e]
            if nd < dist[v]:
                dist[v] = nd
                parent[v] = e
                heapq.heappush(heap, (nd, v))
    return dist, parent


def _links_to(net, parent: list[int], t: int) -> list[int]:
    seq = []
    v = t
    while parent[v] >= 0:
        seq.append(parent[v])
        v = net.links[parent[v]].u
    return seq[::-1]


def nfs_route(scenario: Scenario, *, zero_delay: bool = False) -> RoutePlan:
    """Whole-model placement on the node that would finish computing
    earliest, transfers along least-(backlog+data)-time paths.

    Per round, each unrouted job is scored by transfer-in + compute +
    transfer-out time including current backlogs; the best job is
    routed (all its layers on one node) and its work joins the
    backlogs.  Ties break to the lowest node id, then lowest job id.
    """
    net = scenario.network
    compute = net.compute_nodes()
    if not compute:
        raise InfeasibleTopology("no compute-capable nodes")
    queues = QueueSnapshot.from_network(net)
    remaining = list(scenario.jobs)
    ordered: list[tuple[Job, LayeredPath]] = []
    while remaining:
        best = None  # (cost, job_idx, job, u, h1, h2)
        for job in remaining:
            total_c = sum(job.model.c_mm)
            w_cp = {
                u: (queues.node_mm[u] + total_c) / net.nodes[u].mu_mm_s for u in compute
            }
            u_star = min(compute, key=lambda u: (w_cp[u], u))
            if zero_delay:
                w_in = [1.0] * net.n_links
                w_out = w_in
            else:
                d0, dl = job.model.d_bits(0), job.model.d_bits(job.n_layers)
                w_in = [
                    (queues.link_bits[e] + d0) / lk.mu_bps
                    for e, lk in enumerate(net.links)
                ]
                w_out = [
                    (queues.link_bits[e] + dl) / lk.mu_bps
                    for e, lk in enumerate(net.links)
                ]
            din, pin = _dijkstra(net, w_in, job.src)
            dout, pout = _dijkstra(net, w_out, u_star)
            c_tx1 = 0.0 if zero_delay else din[u_star]
            c_tx2 = 0.0 if zero_delay else dout[job.dst]
            cost = c_tx1 + w_cp[u_star] + c_tx2
            if best is None or cost < best[0] - 0.0:
                h1 = _links_to(net, pin, u_star)
                h2 = _links_to(net, pout, job.dst)
                best = (cost, job, u_star, h1, h2)
        _, job, u_star, h1, h2 = best
        lj = job.n_layers
        segments = [h1] + [[] for _ in range(lj - 1)] + [h2]
        path = topology.path_from_physical(net, segments, [u_star] * lj)
        ordered.append((job, path))
        queues.node_mm[u_star] += sum(job.model.c_mm)
        for e in h1:
            queues.link_bits[e] += job.model.d_bits(0)
        for e in h2:
            queues.link_bits[e] += job.model.d_bits(lj)
        remaining.remove(job)
    return _finalize(scenario, "nfs", ordered, zero_delay=zero_delay)


# ---------------------------------------------------------------------------
# Smallest-workload placement for a final job


def sw_route(
    scenario: Scenario,
    *,
    last_job_id: int | None = None,
    mem_alpha: float | None = None,
    zero_delay: bool = False,
) -> RoutePlan:
    """Greedy prefix, then the designated last job goes (whole) to the
    node with the least pending work per unit rate, along
    least-backlog transfer paths, at lowest priority."""
    jobs = list(scenario.jobs)
    last_id = jobs[-1].id if last_job_id is None else last_job_id
    last = next(j for j in jobs if j.id == last_id)
    prefix = Scenario(
        network=scenario.network,
        jobs=tuple(j for j in jobs if j.id != last_id),
        gamma=scenario.gamma,
        seed=scenario.seed,
    )
    plan = greedy_route(prefix, mem_alpha=mem_alpha, zero_delay=zero_delay)
    net = scenario.network
    queues = QueueSnapshot.from_network(net)
    for job, path in plan.routed():
        queues.add_path(net, job.model, path, mem_alpha=mem_alpha)

    compute = net.compute_nodes()
    u_star = min(compute, key=lambda u: (queues.node_mm[u] / net.nodes[u].mu_mm_s, u))
    if zero_delay:
        w = [1.0] * net.n_links
    else:
        w = [queues.link_bits[e] / lk.mu_bps for e, lk in enumerate(net.links)]
    _, pin = _dijkstra(net, w, last.src)
    _, pout = _dijkstra(net, w, u_star)
    h1 = _links_to(net, pin, u_star)
    h2 = _links_to(net, pout, last.dst)
    lj = last.n_layers
    segments = [h1] + [[] for _ in range(lj - 1)] + [h2]
    path = topology.path_from_physical(net, segments, [u_star] * lj)
    ordered = plan.routed() + [(last, path)]
    return _finalize(scenario, "sw", ordered, mem_alpha=mem_alpha, zero_delay=zero_delay)


# ---------------------------------------------------------------------------
# Brute-force oracle


@dataclass(frozen=True)
class BruteForceLimits:
    """Caps for the exhaustive oracle.

    max_combos limits joint-route count x priority orders for the
    vectorized fictitious evaluation; max_sim_evals limits the same
    product when every combination costs one event-driven simulation.
    """

    max_nodes: int = 5
    max_jobs: int = 3
    max_layers: int = 3
    max_paths_per_job: int = 1000
    max_combos: int = 2_000_000
    max_sim_evals: int = 20_000


def _simple_paths(net, src: int, dst: int) -> list[list[int]]:
    """All simple directed link-id paths src -> dst (DFS, tiny graphs)."""
    if src == dst:
        return [[]]
    out: list[list[int]] = []
    seen = {src}
    trail: list[int] = []

    def dfs(u: int) -> None:
        for e in net.out_links(u):
            v = net.links[e].v
            if v in seen:
                continue
            trail.append(e)
            if v == dst:
                out.append(list(trail))
            else:
                seen.add(v)
                dfs(v)
                seen.remove(v)
            trail.pop()

    dfs(src)
    return out


def _candidate_paths(net, job: Job, limits: BruteForceLimits, zero_delay: bool):
    """Every layered path made of simple per-layer segments.

    With network delay off, segment choice cannot affect any completion
    time, so one canonical segment per endpoint pair suffices.
    """
    compute = net.compute_nodes()
    lj = job.n_layers
    seg_cache: dict[tuple[int, int], list[list[int]]] = {}

    def segs(a: int, b: int) -> list[list[int]]:
        key = (a, b)
        if key not in seg_cache:
            all_segs = _simple_paths(net, a, b)
            if zero_delay and all_segs:
                all_segs = [min(all_segs, key=lambda p: (len(p), p))]
            seg_cache[key] = all_segs
        return seg_cache[key]

    paths: list[LayeredPath] = []
    for nodes in itertools.product(compute, repeat=lj):
        endpoints = [job.src, *nodes, job.dst]
        options = [segs(endpoints[i], endpoints[i + 1]) for i in range(lj + 1)]
        if any(not o for o in options):
            continue
        for combo in itertools.product(*options):
            paths.append(topology.path_from_physical(net, list(combo), list(nodes)))
            if len(paths) > limits.max_paths_per_job:
                raise SizeLimit(
                    f"job {job.id}: >{limits.max_paths_per_job} candidate paths"
                )
    if not paths:
        raise InfeasibleTopology(f"job {job.id}: no layered route")
    return paths


def brute_force_opt(
    scenario: Scenario,
    *,
    system: str = "fictitious",
    mem_alpha: float | None = None,
    zero_delay: bool = False,
    limits: BruteForceLimits | None = None,
) -> RoutePlan:
    """Exhaustive minimum of the makespan over all joint simple-path
    routes and all priority orders, in the fictitious or actual system.

    Only meant for oracle duty on tiny instances; raises SizeLimit
    beyond its caps.  Ties resolve to the first minimum in enumeration
    order (priority orders lexicographic by job id, then path indices).
    """
    limits = limits or BruteForceLimits()
    net = scenario.network
    jobs = list(scenario.jobs)
    if net.n_nodes > limits.max_nodes:
        raise SizeLimit(f"{net.n_nodes} nodes > {limits.max_nodes}")
    if len(jobs) > limits.max_jobs:
        raise SizeLimit(f"{len(jobs)} jobs > {limits.max_jobs}")
    if any(j.n_layers > limits.max_layers for j in jobs):
        raise SizeLimit(f"a job exceeds {limits.max_layers} layers")
    cand = [_candidate_paths(net, j, limits, zero_delay) for j in jobs]
    n_combo = int(np.prod([len(c) for c in cand]))
    n_orders = int(np.prod(range(1, len(jobs) + 1)))
    cap = limits.max_sim_evals if system == "actual" else limits.max_combos
    if n_combo * n_orders > cap:
        raise SizeLimit(f"{n_combo} joint routes x {n_orders} orders > {cap}")

    if system == "fictitious":
        best = _brute_fictitious(scenario, cand, mem_alpha, zero_delay)
    elif system == "actual":
        best = _brute_actual(scenario, cand, mem_alpha, zero_delay)
    else:
        raise ValueError(f"unknown system {system!r}")
    order, picks = best
    ordered = [(jobs[j], cand[j][picks[j]]) for j in order]
    plan = _finalize(scenario, f"opt-{system}", ordered, mem_alpha=mem_alpha, zero_delay=zero_delay)
    if system == "actual":
        attach_actual(scenario, plan, mem_alpha=mem_alpha, zero_delay=zero_delay)
    return plan


def _usage_arrays(scenario, cand, mem_alpha, zero_delay):
    """Per job: base cost vector and (work, usage/rate) component arrays."""
    net = scenario.network
    n, ne = net.n_nodes, net.n_links
    ncomp = n + ne
    node_rate = np.array([nd.mu_mm_s if nd.mu_mm_s > 0 else np.inf for nd in net.nodes])
    link_rate = np.array([lk.mu_bps for lk in net.links])
    q0 = QueueSnapshot.from_network(net)
    bases, works, uses = [], [], []
    for job, paths in zip(scenario.jobs, cand):
        base = np.zeros(len(paths))
        work = np.zeros((len(paths), ncomp))
        use = np.zeros((len(paths), ncomp))
        for p, path in enumerate(paths):
            service, wait = sim.evaluate_path(
                net, job.model, path, q0, mem_alpha=mem_alpha, zero_delay=zero_delay
            )
            base[p] = service + wait
            seen = set()
            for kind, layer, idx in path.steps:
                if kind == "intra":
                    if not zero_delay:
                        work[p, n + idx] += job.model.d_bits(layer)
                        use[p, n + idx] += 1.0 / link_rate[idx]
                else:
                    work[p, idx] += effective_c_mm(job.model, layer, net.nodes[idx], mem_alpha)
                    if idx not in seen:
                        seen.add(idx)
                        use[p, idx] = 1.0 / node_rate[idx]
        bases.append(base)
        works.append(work)
        uses.append(use)
    return bases, works, uses


def _brute_fictitious(scenario, cand, mem_alpha, zero_delay):
    jobs = scenario.jobs
    nj = len(jobs)
    bases, works, uses = _usage_arrays(scenario, cand, mem_alpha, zero_delay)
    # interact[a][b][pa, pb]: wait job b (with path pb) suffers from job
    # a's work (with path pa) when a has higher priority
    interact = [[works[a] @ uses[b].T for b in range(nj)] for a in range(nj)]
    sizes = [len(c) for c in cand]
    best_val = np.inf
    best = None
    for order in itertools.permutations(range(nj)):
        cmax = np.zeros([1] * nj)
        for pos, b in enumerate(order):
            shape = [1] * nj
            shape[b] = sizes[b]
            c_b = bases[b].reshape(shape)
            for a in order[:pos]:
                sh = [1] * nj
                sh[a], sh[b] = sizes[a], sizes[b]
                # row-major reshape wants the earlier axis first
                mat = interact[a][b] if a < b else interact[a][b].T
                c_b = c_b + mat.reshape(sh)
            cmax = np.maximum(cmax, c_b)
        idx = int(np.argmin(cmax))
        val = float(cmax.flat[idx])
        if val < best_val - 1e-15:
            best_val = val
            best = (order, np.unravel_index(idx, cmax.shape))
    order, picks = best
    return list(order), [int(p) for p in picks]


def _brute_actual(scenario, cand, mem_alpha, zero_delay):
    net = scenario.network
    jobs = list(scenario.jobs)
    nj = len(jobs)
    best_val = np.inf
    best = None
    for order in itertools.permutations(range(nj)):
        for picks in itertools.product(*[range(len(c)) for c in cand]):
            ordered = [(jobs[j], cand[j][picks[j]]) for j in order]
            done, _ = sim.simulate_actual(
                net, ordered, mem_alpha=mem_alpha, zero_delay=zero_delay
            )
            val = max(done.values())
            if val < best_val - 1e-15:
                best_val = val
                best = (list(order), list(picks))
    return best


# ---------------------------------------------------------------------------
# Capacity-heterogeneity report


@dataclass(frozen=True)
class AlphaReport:
    alpha: float
    alpha_tx: float
    alpha_cp: float
    alpha1: float
    alpha2: float
    alpha3: float
    h_short: int
    h_long: int
    edge_conn: int
    n_compute_nodes: int
    n_links: int
    n_layers_max: int


def compute_alpha(
    scenario: Scenario, *, h_s_rule: str = "min", zero_delay: bool = False
) -> AlphaReport:
    """Heterogeneity factors of the deployment.

    alpha_tx compares the worst transfer (longest hop path, biggest
    tensor, on paper the fastest links amplify contention) against the
    best; alpha_cp is the compute-rate spread over compute-capable
    nodes.  h_s_rule picks whether the shortest-hop reference uses the
    min (default) or max over jobs.  With network delay disabled,
    transfers are free: alpha_tx = 0 and links drop out of the
    component counts.
    """
    net = scenario.network
    compute = net.compute_nodes()
    v_plus = len(compute)
    e_plus = 0 if zero_delay else net.n_links
    l_max = scenario.max_layers
    k = edge_connectivity(net)

    hs_all, hl_all = [], []
    for job in scenario.jobs:
        hs, hl = hop_path_extremes(net, job.src, job.dst)
        hs_all.append(hs)
        hl_all.append(hl)
    h_long = max(hl_all)
    h_short = min(hs_all) if h_s_rule == "min" else max(hs_all)

    rates_cp = [net.nodes[u].mu_mm_s for u in compute]
    alpha_cp = max(rates_cp) / min(rates_cp)
    if zero_delay:
        alpha_tx = 0.0
    else:
        d_all = [
            job.model.d_bits(l) for job in scenario.jobs for l in range(job.n_layers + 1)
        ]
        mu = [lk.mu_bps for lk in net.links]
        if h_short == 0:
            alpha_tx = np.inf
        else:
            alpha_tx = (h_long * max(d_all) * max(mu)) / (h_short * min(d_all) * min(mu))

    alpha1 = max(2.0 * alpha_tx, alpha_cp)
    if k > 0:
        tx_term = 2.0 * (l_max + 1) * alpha_tx / k
    else:
        tx_term = 0.0 if alpha_tx == 0.0 else np.inf
    alpha2 = max(alpha_cp / v_plus, tx_term)
    alpha3 = max(alpha2 * (v_plus + e_plus), alpha1)
    if k > 0:
        big_tx = 2.0 * (l_max + 1) * (v_plus + e_plus) * alpha_tx / k
    else:
        big_tx = 0.0 if alpha_tx == 0.0 else np.inf
    alpha = max(
        2.0 * alpha_tx, big_tx, (1.0 + e_plus / v_plus) * alpha_cp
    ) * (2.0 - 1.0 / (v_plus + e_plus))
    return AlphaReport(
        alpha=alpha,
        alpha_tx=alpha_tx,
        alpha_cp=alpha_cp,
        alpha1=alpha1,
        alpha2=alpha2,
        alpha3=alpha3,
        h_short=h_short,
        h_long=h_long,
        edge_conn=k,
        n_compute_nodes=v_plus,
        n_links=e_plus,
        n_layers_max=l_max,
    )
