"""Ground-truth evaluation of routed plans.

Two views of the same plan:

* the fictitious tandem-queue estimate: each job pays its full service
  time plus, on every component it uses, the backlog of all
  higher-priority work as if it had to drain first.  This matches the
  objective the routing programs optimize and upper-bounds reality.
* an event-driven simulation of the actual system: components are
  fluid preemptive-resume priority servers, a job's tasks flow along
  its layered path, initial backlogs run as highest-priority background
  work present at t=0.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from . import topology
from .formulations import QueueSnapshot, effective_c_mm
from .topology import LayeredPath
from .workload import DnnModel, Job


@dataclass(frozen=True)
class Task:
    component: tuple[str, int]  # ("node", u) or ("link", e)
    amount: float               # MM for nodes, bits for links


@dataclass(frozen=True)
class TaskChain:
    job_id: int
    tasks: tuple[Task, ...]


def task_chain(
    net: topology.PhysicalNetwork,
    job: Job,
    path: LayeredPath,
    *,
    mem_alpha: float | None = None,
    zero_delay: bool = False,
) -> TaskChain:
    """Ordered component workloads a routed job pushes through."""
    tasks: list[Task] = []
    for kind, layer, idx in path.steps:
        if kind == "intra":
            if not zero_delay:
                tasks.append(Task(("link", idx), job.model.d_bits(layer)))
        else:
            amount = effective_c_mm(job.model, layer, net.nodes[idx], mem_alpha)
            tasks.append(Task(("node", idx), amount))
    return TaskChain(job_id=job.id, tasks=tuple(tasks))


def evaluate_path(
    net: topology.PhysicalNetwork,
    model: DnnModel,
    path: LayeredPath,
    queues: QueueSnapshot,
    *,
    mem_alpha: float | None = None,
    zero_delay: bool = False,
) -> tuple[float, float]:
    """(service_s, wait_s) of one job against frozen backlogs.

    Link backlog is paid per traversal; a node's compute backlog is
    paid once no matter how many layers run there.
    """
    service = 0.0
    wait = 0.0
    seen: set[int] = set()
    for kind, layer, idx in path.steps:
        if kind == "intra":
            if not zero_delay:
                lk = net.links[idx]
                service += model.d_bits(layer) / lk.mu_bps
                wait += queues.link_bits[idx] / lk.mu_bps
        else:
            nd = net.nodes[idx]
            service += effective_c_mm(model, layer, nd, mem_alpha) / nd.mu_mm_s
            if idx not in seen:
                seen.add(idx)
                wait += queues.node_mm[idx] / nd.mu_mm_s
    return service, wait


def fictitious_completion(
    net: topology.PhysicalNetwork,
    routed,  # sequence of (job, path) in priority order, highest first
    *,
    queues0: QueueSnapshot | None = None,
    mem_alpha: float | None = None,
    zero_delay: bool = False,
) -> list[float]:
    """Completion estimates with waiting charged as full backlog drain."""
    queues = queues0.copy() if queues0 is not None else QueueSnapshot.from_network(net)
    out = []
    for job, path in routed:
        service, wait = evaluate_path(
            net, job.model, path, queues, mem_alpha=mem_alpha, zero_delay=zero_delay
        )
        out.append(service + wait)
        queues.add_path(net, job.model, path, mem_alpha=mem_alpha)
    return out


# ---------------------------------------------------------------------------
# Actual-system simulation


@dataclass
class EventLog:
    """(time_s, component, kind, job, event) rows in simulation order."""

    rows: list[tuple[float, str, str, int, str]] = field(default_factory=list)

    def add(self, t: float, comp: tuple[str, int], net, job: int, event: str) -> None:
        kind, idx = comp
        if kind == "link":
            lk = net.links[idx]
            name = f"link:{lk.u}->{lk.v}"
        else:
            name = f"node:{idx}"
        self.rows.append((t, name, kind, job, event))

    def to_csv(self, fh) -> None:
        fh.write("time_s,component,kind,job,event\n")
        for t, name, kind, job, event in self.rows:
            fh.write(f"{t!r},{name},{kind},{job},{event}\n")


class _Server:
    """One fluid preemptive-resume priority server."""

    __slots__ = ("comp", "rate", "remaining", "serving", "started", "t_last", "version")

    def __init__(self, comp, rate):
        self.comp = comp
        self.rate = rate
        self.remaining: dict[int, float] = {}
        self.serving: int | None = None
        self.started: set[int] = set()
        self.t_last = 0.0
        self.version = 0

    def progress_to(self, t: float) -> None:
        if self.serving is not None:
            self.remaining[self.serving] -= (t - self.t_last) * self.rate
        self.t_last = t

    def pick(self, rank) -> int | None:
        if not self.remaining:
            return None
        return min(self.remaining, key=lambda j: (rank(j), j))


def simulate_actual(
    net: topology.PhysicalNetwork,
    routed,  # sequence of (job, path) in priority order, highest first
    *,
    queues0: QueueSnapshot | None = None,
    mem_alpha: float | None = None,
    zero_delay: bool = False,
) -> tuple[dict[int, float], EventLog]:
    """Event-driven run; returns per-job completion times and the log.

    All jobs release at t=0.  Initial backlogs are background work
    (job id -1) already in service at t=0 with priority above every
    job.  Simultaneous events process in (time, priority, component,
    job) order.
    """
    queues = queues0 if queues0 is not None else QueueSnapshot.from_network(net)
    chains = {
        job.id: task_chain(net, job, path, mem_alpha=mem_alpha, zero_delay=zero_delay)
        for job, path in routed
    }
    prio = {job.id: i for i, (job, _) in enumerate(routed)}
    prio[-1] = -1

    def rank(j: int) -> int:
        return prio[j]

    servers: dict[tuple[str, int], _Server] = {}

    def server(comp) -> _Server:
        s = servers.get(comp)
        if s is None:
            kind, idx = comp
            rate = net.nodes[idx].mu_mm_s if kind == "node" else net.links[idx].mu_bps
            s = servers[comp] = _Server(comp, rate)
        return s

    log = EventLog()
    comp_key = {"node": 0, "link": 1}
    heap: list[tuple] = []
    seq = 0

    def push(t, pr, comp, job, kind, payload) -> None:
        nonlocal seq
        ck = (comp_key[comp[0]], comp[1]) if comp else (2, 0)
        heapq.heappush(heap, (t, pr, ck, job, seq, kind, comp, payload))
        seq += 1

    def reschedule(s: _Server, t: float) -> None:
        """Re-pick who is served and (re)arm the finish event."""
        old = s.serving
        new = s.pick(rank)
        s.version += 1
        if new is None:
            s.serving = None
            return
        if old is not None and old != new and old in s.remaining:
            log.add(t, s.comp, net, old, "preempt")
        if old != new:
            verb = "resume" if new in s.started else "start"
            s.started.add(new)
            log.add(t, s.comp, net, new, verb)
        s.serving = new
        finish_t = t + s.remaining[new] / s.rate
        push(finish_t, rank(new), s.comp, new, "finish", s.version)

    # background backlog occupies its components from t=0
    for u, q in enumerate(queues.node_mm):
        if q > 0:
            s = server(("node", u))
            s.remaining[-1] = float(q)
    if not zero_delay:
        for e, q in enumerate(queues.link_bits):
            if q > 0:
                s = server(("link", e))
                s.remaining[-1] = float(q)
    for s in servers.values():
        reschedule(s, 0.0)

    task_idx = {job.id: 0 for job, _ in routed}
    done: dict[int, float] = {}
    for job, _ in routed:
        chain = chains[job.id]
        if not chain.tasks:
            done[job.id] = 0.0
            continue
        push(0.0, rank(job.id), chain.tasks[0].component, job.id, "arrive", 0)

    while heap:
        t, pr, ck, job, _, kind, comp, payload = heapq.heappop(heap)
        s = server(comp)
        if kind == "finish":
            if payload != s.version or s.serving != job:
                continue  # superseded by a preemption or later arrival
            s.progress_to(t)
            if s.remaining[job] > 1e-9 * max(1.0, s.rate):
                # fp drift; re-arm for the sliver that is left
                reschedule(s, t)
                continue
            del s.remaining[job]
            s.serving = None
            s.started.discard(job)  # a later revisit is a fresh start
            log.add(t, comp, net, job, "finish")
            if job != -1:
                task_idx[job] += 1
                chain = chains[job]
                if task_idx[job] < len(chain.tasks):
                    nxt = chain.tasks[task_idx[job]]
                    push(t, pr, nxt.component, job, "arrive", None)
                else:
                    done[job] = t
            reschedule(s, t)
        else:  # arrive
            s.progress_to(t)
            chain = chains[job]
            s.remaining[job] = chain.tasks[task_idx[job]].amount
            reschedule(s, t)
    return done, log


def c_max(completions: dict[int, float]) -> float:
    return max(completions.values()) if completions else 0.0
