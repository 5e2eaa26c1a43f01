"""Routing programs on the layered graph.

Two program families share the variable convention r[edge] = 1 iff the
job's route uses that layered edge:

* the joint service-time ILP: all jobs at once, per-job flow
  conservation, optional per-node compute/memory budgets, objective =
  total service time (plus a tiny anti-cycling penalty per used edge);
* the single-job program: one job against frozen queue backlogs, with
  extra z[u] variables that pay node u's queueing wait once if any
  layer runs on u.  Its constraint matrix is totally unimodular, so the
  [0,1] relaxation solves to an integral vertex and routing one job
  costs one LP solve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import topology
from .linprog import LinearProgram
from .topology import LayeredGraph, LayeredPath, MalformedPath
from .workload import DnnModel, Job, Scenario


class InfeasibleTopology(ValueError):
    """No usable route exists (e.g., no compute node is reachable)."""


class FractionalSolution(ValueError):
    """Solution values stray from {0, 1} beyond tolerance."""


# Pure tie-break on otherwise zero-cost transmission edges when network
# delay is disabled; keeps returned vertices on short paths.
ZERO_DELAY_EPS = 1e-12


@dataclass
class QueueSnapshot:
    """Backlogs per physical component; owned by one evaluation context."""

    node_mm: np.ndarray
    link_bits: np.ndarray

    @staticmethod
    def from_network(net: topology.PhysicalNetwork) -> "QueueSnapshot":
        return QueueSnapshot(
            node_mm=np.array([nd.q_mm for nd in net.nodes], dtype=float),
            link_bits=np.array([lk.q_bits for lk in net.links], dtype=float),
        )

    @staticmethod
    def zeros(net: topology.PhysicalNetwork) -> "QueueSnapshot":
        return QueueSnapshot(
            node_mm=np.zeros(net.n_nodes), link_bits=np.zeros(net.n_links)
        )

    def copy(self) -> "QueueSnapshot":
        return QueueSnapshot(self.node_mm.copy(), self.link_bits.copy())

    def add_path(
        self,
        net: topology.PhysicalNetwork,
        model: DnnModel,
        path: LayeredPath,
        *,
        mem_alpha: float | None = None,
    ) -> None:
        """Aggregate a routed job's work onto the physical components."""
        for kind, layer, idx in path.steps:
            if kind == "intra":
                self.link_bits[idx] += model.d_bits(layer)
            else:
                self.node_mm[idx] += effective_c_mm(model, layer, net.nodes[idx], mem_alpha)


def effective_c_mm(
    model: DnnModel, layer: int, node: topology.NodeSpec, mem_alpha: float | None
) -> float:
    """Compute work of `layer` (1-based) on a node, with the optional
    slowdown when the layer's footprint exceeds the node's memory."""
    c = model.c_mm[layer - 1]
    if mem_alpha is not None and model.m_kb[layer - 1] > node.mem_kb:
        c *= 1.0 + mem_alpha
    return c


class VarIndex:
    """Column layout shared by builders, extractors, and tests.

    Single-job layout ([z | cross | intra] to match the block structure
    the unimodularity argument is stated for):
      z[u]            -> u
      cross(u, l)     -> n + u*L + (l-1)         (node-major)
      intra(l, e)     -> n + n*L + l*|E| + e     (layer-major)
    Service layout: job-major copies of the layered edge ids, no z.
    """

    def __init__(self, kind: str, net, n_layers: int, n_jobs: int = 1):
        self.kind = kind
        self.net = net
        self.n_layers = n_layers
        self.n_jobs = n_jobs
        n, ne = net.n_nodes, net.n_links
        self.graph = topology.build_layered_graph(net, n_layers)
        if kind == "single":
            self.n_cols = n + n * n_layers + (n_layers + 1) * ne
        elif kind == "service":
            self.n_cols = n_jobs * self.graph.n_edges
        else:
            raise ValueError(kind)

    @staticmethod
    def single_job(net, n_layers: int) -> "VarIndex":
        return VarIndex("single", net, n_layers)

    @staticmethod
    def service(net, n_layers: int, n_jobs: int) -> "VarIndex":
        return VarIndex("service", net, n_layers, n_jobs)

    # -- single-job columns -------------------------------------------

    def col_z(self, u: int) -> int:
        assert self.kind == "single"
        return u

    def col_cross(self, u: int, layer: int) -> int:
        assert self.kind == "single"
        return self.net.n_nodes + u * self.n_layers + (layer - 1)

    def col_intra(self, layer: int, link: int) -> int:
        assert self.kind == "single"
        n = self.net.n_nodes
        return n + n * self.n_layers + layer * self.net.n_links + link

    def col_edge(self, eid: int, job: int = 0) -> int:
        """Column of a layered-graph edge id."""
        if self.kind == "service":
            return job * self.graph.n_edges + eid
        kind, idx, layer = self.graph.edge_component(eid)
        if kind == "link":
            return self.col_intra(layer, idx)
        return self.col_cross(idx, layer)

    def edge_values(self, x: np.ndarray, job: int = 0) -> np.ndarray:
        """Edge-indexed view (layered edge id -> value) of a solution."""
        vals = np.empty(self.graph.n_edges)
        for eid in range(self.graph.n_edges):
            vals[eid] = x[self.col_edge(eid, job)]
        return vals


# ---------------------------------------------------------------------------
# Single-job program


def _reachable(graph: LayeredGraph, compute_ok, src: int, dst: int) -> bool:
    """BFS in the layered graph; cross edges only at compute-capable nodes."""
    start = graph.vertex(0, src)
    goal = graph.vertex(graph.n_layers, dst)
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        if v == goal:
            return True
        for eid in graph.out_edges(v):
            kind, idx, _ = graph.edge_component(eid)
            if kind == "node" and not compute_ok[idx]:
                continue
            _, head = graph.edge_endpoints(eid)
            if head not in seen:
                seen.add(head)
                stack.append(head)
    return False


def build_single_job_lp(
    net: topology.PhysicalNetwork,
    job: Job,
    queues: QueueSnapshot,
    *,
    relax: bool = True,
    mem_alpha: float | None = None,
    zero_delay: bool = False,
) -> tuple[LinearProgram, VarIndex]:
    """One job against frozen backlogs: minimize service + waiting.

    Waiting on a link is paid per traversal; waiting in a node's
    compute queue is paid once via z[u] >= r[cross(u, l)].  With
    relax=True the {0,1} constraints become [0,1] bounds; total
    unimodularity keeps the optimal vertex integral.
    """
    L = job.n_layers
    vi = VarIndex.single_job(net, L)
    graph = vi.graph
    n, ne = net.n_nodes, net.n_links
    compute_ok = [nd.mu_mm_s > 0 for nd in net.nodes]
    if not _reachable(graph, compute_ok, job.src, job.dst):
        raise InfeasibleTopology(
            f"job {job.id}: no layered route {job.src} -> {job.dst} with {L} layers"
        )

    lp = LinearProgram(vi.n_cols)
    lp.hi[:] = 1.0
    for u in range(n):
        node = net.nodes[u]
        if not compute_ok[u]:
            lp.hi[vi.col_z(u)] = 0.0
            for l in range(1, L + 1):
                lp.hi[vi.col_cross(u, l)] = 0.0
            continue
        lp.c[vi.col_z(u)] = queues.node_mm[u] / node.mu_mm_s
        for l in range(1, L + 1):
            lp.c[vi.col_cross(u, l)] = effective_c_mm(job.model, l, node, mem_alpha) / node.mu_mm_s
    for l in range(0, L + 1):
        for e, lk in enumerate(net.links):
            col = vi.col_intra(l, e)
            if zero_delay:
                lp.c[col] = ZERO_DELAY_EPS
            else:
                lp.c[col] = (job.model.d_bits(l) + queues.link_bits[e]) / lk.mu_bps
    if not relax:
        lp.is_int[n:] = True

    # z[u] >= r[cross(u, l)]  (node wait paid once)
    for u in range(n):
        for l in range(1, L + 1):
            lp.add_row([(vi.col_cross(u, l), 1.0), (vi.col_z(u), -1.0)], "<=", 0.0)
    # flow conservation at every layered vertex
    src_v = graph.vertex(0, job.src)
    dst_v = graph.vertex(L, job.dst)
    for u in range(n):
        for l in range(0, L + 1):
            v = graph.vertex(l, u)
            entries = [(vi.col_edge(eid), 1.0) for eid in graph.out_edges(v)]
            entries += [(vi.col_edge(eid), -1.0) for eid in graph.in_edges(v)]
            rhs = 1.0 if v == src_v else (-1.0 if v == dst_v else 0.0)
            lp.add_row(entries, "=", rhs)
    return lp, vi


def single_job_blocks(net: topology.PhysicalNetwork, n_layers: int):
    """Dense integer constraint blocks of the single-job program.

    Returns (A1, A2, A_full): the cross-vs-z rows, the flow rows, and
    the full matrix with slack/identity columns laid out as
    [[A1 I 0], [A2 0 0], [I 0 I]] (variable upper bounds included).
    """
    vi = VarIndex.single_job(net, n_layers)
    n, ne, L = net.n_nodes, net.n_links, n_layers
    ny = vi.n_cols
    a1 = np.zeros((n * L, ny), dtype=np.int64)
    for u in range(n):
        for l in range(1, L + 1):
            r = u * L + (l - 1)
            a1[r, vi.col_cross(u, l)] = 1
            a1[r, vi.col_z(u)] = -1
    a2 = np.zeros((n * (L + 1), ny), dtype=np.int64)
    graph = vi.graph
    for u in range(n):
        for l in range(0, L + 1):
            r = u * (L + 1) + l
            v = graph.vertex(l, u)
            for eid in graph.out_edges(v):
                a2[r, vi.col_edge(eid)] = 1
            for eid in graph.in_edges(v):
                a2[r, vi.col_edge(eid)] = -1
    m1, m2 = a1.shape[0], a2.shape[0]
    full = np.zeros((m1 + m2 + ny, ny + m1 + ny), dtype=np.int64)
    full[:m1, :ny] = a1
    full[:m1, ny : ny + m1] = np.eye(m1, dtype=np.int64)
    full[m1 : m1 + m2, :ny] = a2
    full[m1 + m2 :, :ny] = np.eye(ny, dtype=np.int64)
    full[m1 + m2 :, ny + m1 :] = np.eye(ny, dtype=np.int64)
    return a1, a2, full


# ---------------------------------------------------------------------------
# Joint service ILP


def build_service_ilp(
    scenario: Scenario,
    *,
    budgets: bool = True,
    delta_s: float = 1e-6,
    relax: bool = False,
    mem_alpha: float | None = None,
    zero_delay: bool = False,
) -> tuple[LinearProgram, VarIndex]:
    """All jobs at once: minimize total service time.

    Every job gets the full layered edge set of the deepest model as
    variables (edges it cannot use are fixed to zero), so the column
    count is J*((L+1)|E| + L|V|).  Budgets add one compute and one
    memory row per node with finite capacity.  delta_s > 0 charges
    every used edge a tiny extra cost, which keeps optimal solutions
    off zero-cost cycles; 0 disables it.
    """
    net = scenario.network
    jobs = scenario.jobs
    L = scenario.max_layers
    vi = VarIndex.service(net, L, len(jobs))
    graph = vi.graph
    n, ne = net.n_nodes, net.n_links
    compute_ok = [nd.mu_mm_s > 0 for nd in net.nodes]

    lp = LinearProgram(vi.n_cols)
    lp.hi[:] = 1.0
    for j, job in enumerate(jobs):
        lj = job.n_layers
        for eid in range(graph.n_edges):
            col = vi.col_edge(eid, j)
            kind, idx, layer = graph.edge_component(eid)
            usable = layer <= lj and (kind == "link" or compute_ok[idx])
            if not usable:
                lp.hi[col] = 0.0
                continue
            if kind == "link":
                service = 0.0 if zero_delay else job.model.d_bits(layer) / net.links[idx].mu_bps
            else:
                node = net.nodes[idx]
                service = effective_c_mm(job.model, layer, node, mem_alpha) / node.mu_mm_s
            lp.c[col] = service + delta_s
            lp.is_int[col] = not relax

    for j, job in enumerate(jobs):
        lj = job.n_layers
        src_v = graph.vertex(0, job.src)
        dst_v = graph.vertex(lj, job.dst)
        for u in range(n):
            for l in range(0, lj + 1):
                v = graph.vertex(l, u)
                entries = []
                for eid in graph.out_edges(v):
                    _, _, layer = graph.edge_component(eid)
                    if layer <= lj:
                        entries.append((vi.col_edge(eid, j), 1.0))
                entries += [(vi.col_edge(eid, j), -1.0) for eid in graph.in_edges(v)]
                rhs = 1.0 if v == src_v else (-1.0 if v == dst_v else 0.0)
                lp.add_row(entries, "=", rhs)

    if budgets:
        for u in range(n):
            node = net.nodes[u]
            if not compute_ok[u]:
                continue
            c_entries, m_entries = [], []
            for j, job in enumerate(jobs):
                for l in range(1, job.n_layers + 1):
                    eid = graph.n_intra + (l - 1) * n + u
                    col = vi.col_edge(eid, j)
                    c_entries.append((col, effective_c_mm(job.model, l, node, mem_alpha)))
                    m_entries.append((col, job.model.m_kb[l - 1]))
            if np.isfinite(node.cbar_mm):
                lp.add_row(c_entries, "<=", node.cbar_mm)
            if np.isfinite(node.mem_kb):
                lp.add_row(m_entries, "<=", node.mem_kb)
    return lp, vi


def service_objective_s(vi: VarIndex, scenario: Scenario, x: np.ndarray, **kw) -> float:
    """Pure total service time of a service-ILP solution (no delta term)."""
    net = scenario.network
    zero_delay = kw.get("zero_delay", False)
    mem_alpha = kw.get("mem_alpha")
    total = 0.0
    for j, job in enumerate(scenario.jobs):
        vals = vi.edge_values(x, j)
        for eid in np.flatnonzero(vals > 0.5):
            kind, idx, layer = vi.graph.edge_component(eid)
            if kind == "link":
                if not zero_delay:
                    total += job.model.d_bits(layer) / net.links[idx].mu_bps
            else:
                node = net.nodes[idx]
                total += effective_c_mm(job.model, layer, node, mem_alpha) / node.mu_mm_s
    return total


# ---------------------------------------------------------------------------
# Path extraction


def extract_path(
    vi: VarIndex, x: np.ndarray, src: int, dst: int, *, job: int = 0, tol: float = 1e-6
) -> LayeredPath:
    """Turn a {0,1} edge solution into a layered path.

    Values farther than `tol` from both 0 and 1 raise
    FractionalSolution (solutions of the relaxation should never do
    this; such an instance is a counterexample worth keeping).  Chosen
    edges that form closed loops off the walk are dropped.
    """
    graph = vi.graph
    net = vi.net
    vals = vi.edge_values(x, job)
    offside = np.flatnonzero((vals > tol) & (vals < 1.0 - tol))
    if offside.size:
        raise FractionalSolution(
            f"{offside.size} edge values off {{0,1}}, first at edge {int(offside[0])} "
            f"value {vals[int(offside[0])]:.6g}"
        )
    chosen = set(int(e) for e in np.flatnonzero(vals >= 1.0 - tol))

    crosses: dict[int, int] = {}
    for eid in chosen:
        kind, idx, layer = graph.edge_component(eid)
        if kind == "node":
            if layer in crosses:
                raise MalformedPath(f"two compute assignments for layer {layer}")
            crosses[layer] = eid
    n_layers = len(crosses)
    if sorted(crosses) != list(range(1, n_layers + 1)):
        raise MalformedPath(f"compute layers {sorted(crosses)} are not 1..L")

    steps: list[topology.Step] = []
    node = src
    for l in range(0, n_layers + 1):
        if l < n_layers:
            exit_node = graph.edge_component(crosses[l + 1])[1]
        else:
            exit_node = dst
        layer_edges = {
            graph.edge_component(eid)[1] for eid in chosen
            if not graph.is_cross(eid) and graph.edge_component(eid)[2] == l
        }
        walk = _walk_segment(net, layer_edges, node, exit_node)
        steps.extend(("intra", l, e) for e in walk)
        if l < n_layers:
            steps.append(("cross", l + 1, exit_node))
        node = exit_node
    return LayeredPath(steps=tuple(steps))


def _walk_segment(net, layer_edges: set[int], start: int, goal: int) -> list[int]:
    """Walk start -> goal using each chosen edge at most once.

    Depth-first with lowest link id preferred; edges not on the found
    walk are detached cycles and are dropped.
    """
    if start == goal and not layer_edges:
        return []
    by_node: dict[int, list[int]] = {}
    for e in sorted(layer_edges):
        by_node.setdefault(net.links[e].u, []).append(e)

    used: set[int] = set()
    walk: list[int] = []

    def dfs(at: int) -> bool:
        if at == goal:
            return True
        for e in by_node.get(at, []):
            if e in used:
                continue
            used.add(e)
            walk.append(e)
            if dfs(net.links[e].v):
                return True
            walk.pop()
            used.remove(e)
        return False

    if not dfs(start):
        raise MalformedPath(f"chosen edges do not connect {start} to {goal}")
    return walk


# ---------------------------------------------------------------------------
# Hop-count baseline placement


@dataclass(frozen=True)
class BaselineRoute:
    path: LayeredPath
    approx_cost_s: float  # the score the placement was chosen by
    service_s: float      # true service time of the materialized route


class _HopPaths:
    """Deterministic shortest-hop paths and their mean link rates."""

    def __init__(self, net: topology.PhysicalNetwork):
        self.net = net
        n = net.n_nodes
        self.hops = np.full((n, n), -1, dtype=int)
        self.paths: list[list[list[int] | None]] = [[None] * n for _ in range(n)]
        for s in range(n):
            parent_link = [-1] * n
            dist = [-1] * n
            dist[s] = 0
            queue = [s]
            for u in queue:
                for e in sorted(net.out_links(u), key=lambda e: net.links[e].v):
                    w = net.links[e].v
                    if dist[w] < 0:
                        dist[w] = dist[u] + 1
                        parent_link[w] = e
                        queue.append(w)
            for t in range(n):
                if dist[t] < 0:
                    continue
                self.hops[s, t] = dist[t]
                seq: list[int] = []
                v = t
                while v != s:
                    e = parent_link[v]
                    seq.append(e)
                    v = net.links[e].u
                self.paths[s][t] = seq[::-1]

    def mean_rate(self, s: int, t: int) -> float:
        seq = self.paths[s][t]
        if not seq:
            return np.inf
        return float(np.mean([self.net.links[e].mu_bps for e in seq]))


def assignment_baseline_route(
    net: topology.PhysicalNetwork, job: Job, queues: QueueSnapshot | None = None
) -> BaselineRoute:
    """Layer placement by the hop-count transfer approximation.

    Picks compute nodes u(1..L) minimizing sum of c_l/mu_u plus
    hops(u,v) * d_l / (mean link rate on the shortest-hop path) for
    each transfer, then materializes the route along those shortest-hop
    paths.  Queue state does not enter the selection (service-time
    heuristic); it is accepted for interface uniformity.
    """
    del queues
    hop = _hop_paths_of(net)
    L = job.n_layers
    compute = net.compute_nodes()
    if not compute:
        raise InfeasibleTopology("no compute-capable nodes")

    def transfer(u: int, v: int, d_bits: float) -> float:
        if u == v:
            return 0.0
        h = hop.hops[u, v]
        if h < 0:
            return np.inf
        return h * d_bits / hop.mean_rate(u, v)

    best: dict[int, float] = {job.src: 0.0}
    choice: list[dict[int, int]] = []
    for l in range(1, L + 1):
        nxt: dict[int, float] = {}
        pick: dict[int, int] = {}
        for v in compute:
            cands = [
                (best[u] + transfer(u, v, job.model.d_bits(l - 1)), u) for u in best
            ]
            cost, u = min(cands, key=lambda t: (t[0], t[1]))
            cost += job.model.c_mm[l - 1] / net.nodes[v].mu_mm_s
            if np.isfinite(cost):
                nxt[v] = cost
                pick[v] = u
        if not nxt:
            raise InfeasibleTopology(f"job {job.id}: no reachable placement at layer {l}")
        best, _ = nxt, choice.append(pick)
    finals = [
        (best[u] + transfer(u, job.dst, job.model.d_bits(L)), u) for u in best
    ]
    total, last = min(finals, key=lambda t: (t[0], t[1]))
    if not np.isfinite(total):
        raise InfeasibleTopology(f"job {job.id}: destination unreachable")

    plan = [last]
    for l in range(L - 1, 0, -1):
        plan.append(choice[l][plan[-1]])
    plan = plan[::-1]

    segments: list[list[int]] = []
    at = job.src
    for u in plan + [job.dst]:
        segments.append(list(hop.paths[at][u]) if at != u else [])
        at = u
    path = topology.path_from_physical(net, segments, plan)
    service = 0.0
    for kind, layer, idx in path.steps:
        if kind == "intra":
            service += job.model.d_bits(layer) / net.links[idx].mu_bps
        else:
            service += job.model.c_mm[layer - 1] / net.nodes[idx].mu_mm_s
    return BaselineRoute(path=path, approx_cost_s=total, service_s=service)


_hop_cache: dict[int, _HopPaths] = {}


def _hop_paths_of(net: topology.PhysicalNetwork) -> _HopPaths:
    key = id(net)
    hit = _hop_cache.get(key)
    if hit is None or hit.net is not net:
        hit = _HopPaths(net)
        _hop_cache.clear()
        _hop_cache[key] = hit
    return hit


# ---------------------------------------------------------------------------
# Completion-time lower bounds


@dataclass(frozen=True)
class LowerBounds:
    lb_max_s: float
    lb_avg_s: float
    n_compute_nodes: int
    n_links: int


def compute_lower_bounds(
    scenario: Scenario, solo_service_s, *, zero_delay: bool = False
) -> LowerBounds:
    """Makespan lower bounds from per-job best-case service times.

    Any schedule must finish the slowest job's best-case route, and
    all jobs' best-case work spread perfectly over every component
    still takes the average; with network delay disabled only compute
    nodes count as components.
    """
    s = list(solo_service_s)
    if len(s) != len(scenario.jobs):
        raise ValueError("need one solo service time per job")
    v_plus = len(scenario.network.compute_nodes())
    e_plus = 0 if zero_delay else scenario.network.n_links
    return LowerBounds(
        lb_max_s=max(s),
        lb_avg_s=sum(s) / max(1, v_plus + e_plus),
        n_compute_nodes=v_plus,
        n_links=e_plus,
    )
