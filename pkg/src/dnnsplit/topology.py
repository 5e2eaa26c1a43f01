"""Physical networks, layered routing graphs, and path bookkeeping.

A physical network is a set of compute-capable nodes joined by directed
transmission links.  Routing a job that runs an L-layer model is phrased
as a path problem on a *layered graph*: L+1 copies of the physical
network stacked on top of each other, where staying inside copy l means
forwarding data between layers l and l+1, and the cross edge from a
node's copy in layer l-1 to its copy in layer l means "layer l is
computed at that node".
"""

from __future__ import annotations

import functools
import math
from collections import deque
from dataclasses import dataclass, field

import networkx as nx
import numpy as np


class MalformedPath(ValueError):
    """A layered path violates a structural invariant."""


class GenerationFailed(RuntimeError):
    """Random network generation exhausted its retry budget."""


@dataclass(frozen=True)
class NodeSpec:
    """A compute node.  mu_mm_s == 0 marks a node that cannot compute."""

    mu_mm_s: float
    mem_kb: float = math.inf
    cbar_mm: float = math.inf
    q_mm: float = 0.0
    pos: tuple[float, float] | None = None

    def __post_init__(self):
        if self.mu_mm_s < 0 or self.q_mm < 0:
            raise ValueError("node rates and queues must be non-negative")


@dataclass(frozen=True)
class LinkSpec:
    """A directed transmission link u -> v."""

    u: int
    v: int
    mu_bps: float
    q_bits: float = 0.0

    def __post_init__(self):
        if self.mu_bps <= 0:
            raise ValueError("link rate must be positive")
        if self.q_bits < 0:
            raise ValueError("link queue must be non-negative")
        if self.u == self.v:
            raise ValueError("self-loop links are not allowed")


@dataclass(frozen=True)
class PhysicalNetwork:
    """Immutable directed network; queue fields hold the t=0 backlog."""

    nodes: tuple[NodeSpec, ...]
    links: tuple[LinkSpec, ...]
    _link_ids: dict = field(init=False, repr=False, compare=False)
    _out: tuple = field(init=False, repr=False, compare=False)
    _in: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.nodes)
        if n == 0:
            raise ValueError("network needs at least one node")
        link_ids: dict[tuple[int, int], int] = {}
        out: list[list[int]] = [[] for _ in range(n)]
        inc: list[list[int]] = [[] for _ in range(n)]
        for e, lk in enumerate(self.links):
            if not (0 <= lk.u < n and 0 <= lk.v < n):
                raise ValueError(f"link {e} references unknown node")
            if (lk.u, lk.v) in link_ids:
                raise ValueError(f"duplicate link {lk.u}->{lk.v}")
            link_ids[(lk.u, lk.v)] = e
            out[lk.u].append(e)
            inc[lk.v].append(e)
        object.__setattr__(self, "_link_ids", link_ids)
        object.__setattr__(self, "_out", tuple(tuple(x) for x in out))
        object.__setattr__(self, "_in", tuple(tuple(x) for x in inc))
        if not self._connected():
            raise ValueError("network must be connected (ignoring direction)")

    def _connected(self) -> bool:
        n = len(self.nodes)
        seen = [False] * n
        seen[0] = True
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for e in self._out[u] + self._in[u]:
                lk = self.links[e]
                w = lk.v if lk.u == u else lk.u
                if not seen[w]:
                    seen[w] = True
                    queue.append(w)
        return all(seen)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_links(self) -> int:
        return len(self.links)

    def link_id(self, u: int, v: int) -> int | None:
        return self._link_ids.get((u, v))

    def out_links(self, u: int) -> tuple[int, ...]:
        return self._out[u]

    def in_links(self, u: int) -> tuple[int, ...]:
        return self._in[u]

    def compute_nodes(self) -> list[int]:
        """Nodes with positive compute rate."""
        return [u for u, nd in enumerate(self.nodes) if nd.mu_mm_s > 0]

    def to_json(self) -> dict:
        nodes = []
        for i, nd in enumerate(self.nodes):
            rec = {
                "id": i,
                "mu_mm_s": nd.mu_mm_s,
                "mem_kb": nd.mem_kb,
                "cbar_mm": nd.cbar_mm,
                "q_mm": nd.q_mm,
            }
            if nd.pos is not None:
                rec["x_m"] = nd.pos[0]
                rec["y_m"] = nd.pos[1]
            nodes.append(rec)
        links = [
            {"from": lk.u, "to": lk.v, "mu_bps": lk.mu_bps, "q_bits": lk.q_bits}
            for lk in self.links
        ]
        return {"nodes": nodes, "links": links}

    @staticmethod
    def from_json(obj: dict) -> "PhysicalNetwork":
        recs = sorted(obj["nodes"], key=lambda r: r["id"])
        if [r["id"] for r in recs] != list(range(len(recs))):
            raise ValueError("node ids must be 0..n-1")
        nodes = tuple(
            NodeSpec(
                mu_mm_s=r["mu_mm_s"],
                mem_kb=r.get("mem_kb", math.inf),
                cbar_mm=r.get("cbar_mm", math.inf),
                q_mm=r.get("q_mm", 0.0),
                pos=(r["x_m"], r["y_m"]) if "x_m" in r else None,
            )
            for r in recs
        )
        links = tuple(
            LinkSpec(u=r["from"], v=r["to"], mu_bps=r["mu_bps"], q_bits=r.get("q_bits", 0.0))
            for r in obj["links"]
        )
        return PhysicalNetwork(nodes=nodes, links=links)


# ---------------------------------------------------------------------------
# Layered graph


class LayeredGraph:
    """L+1 stacked copies of a physical network.

    Vertex (l, u) has id l*n + u.  Edge ids: the intra-layer copy of
    physical link e in layer l is l*|E| + e; the cross edge entering
    node u's copy in layer l (l >= 1) is (L+1)*|E| + (l-1)*n + u.
    """

    def __init__(self, net: PhysicalNetwork, n_layers: int):
        if n_layers < 0:
            raise ValueError("layer count must be >= 0")
        self.net = net
        self.n_layers = n_layers
        n, ne = net.n_nodes, net.n_links
        self.n_vertices = (n_layers + 1) * n
        self.n_intra = (n_layers + 1) * ne
        self.n_edges = self.n_intra + n_layers * n
        out: list[list[int]] = [[] for _ in range(self.n_vertices)]
        inc: list[list[int]] = [[] for _ in range(self.n_vertices)]
        for l in range(n_layers + 1):
            for e, lk in enumerate(net.links):
                eid = l * ne + e
                out[l * n + lk.u].append(eid)
                inc[l * n + lk.v].append(eid)
        for l in range(1, n_layers + 1):
            for u in range(n):
                eid = self.n_intra + (l - 1) * n + u
                out[(l - 1) * n + u].append(eid)
                inc[l * n + u].append(eid)
        self._out = [tuple(x) for x in out]
        self._in = [tuple(x) for x in inc]

    def vertex(self, layer: int, node: int) -> int:
        return layer * self.net.n_nodes + node

    def vertex_layer(self, vid: int) -> int:
        return vid // self.net.n_nodes

    def vertex_node(self, vid: int) -> int:
        return vid % self.net.n_nodes

    def is_cross(self, eid: int) -> bool:
        return eid >= self.n_intra

    def edge_component(self, eid: int) -> tuple[str, int, int]:
        """Physical component behind an edge: (kind, index, layer).

        Intra-layer edges map to ("link", link_id, l); the cross edge
        into layer l at node u maps to ("node", u, l).
        """
        ne, n = self.net.n_links, self.net.n_nodes
        if eid < self.n_intra:
            return ("link", eid % ne, eid // ne)
        k = eid - self.n_intra
        return ("node", k % n, k // n + 1)

    def edge_endpoints(self, eid: int) -> tuple[int, int]:
        kind, idx, layer = self.edge_component(eid)
        if kind == "link":
            lk = self.net.links[idx]
            return (self.vertex(layer, lk.u), self.vertex(layer, lk.v))
        return (self.vertex(layer - 1, idx), self.vertex(layer, idx))

    def rate(self, eid: int) -> float:
        """Service rate of the physical component behind an edge."""
        kind, idx, _ = self.edge_component(eid)
        if kind == "link":
            return self.net.links[idx].mu_bps
        return self.net.nodes[idx].mu_mm_s

    def out_edges(self, vid: int) -> tuple[int, ...]:
        return self._out[vid]

    def in_edges(self, vid: int) -> tuple[int, ...]:
        return self._in[vid]


def build_layered_graph(net: PhysicalNetwork, n_layers: int) -> LayeredGraph:
    return LayeredGraph(net, n_layers)


# ---------------------------------------------------------------------------
# Layered paths

# A step is ("intra", layer, link_id) or ("cross", layer, node_id); the
# cross step for layer l means "layer l computed at node_id".
Step = tuple[str, int, int]


@dataclass(frozen=True)
class LayeredPath:
    steps: tuple[Step, ...]

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(tuple(s) for s in self.steps))

    @property
    def n_layers(self) -> int:
        return sum(1 for k, _, _ in self.steps if k == "cross")

    def compute_plan(self) -> dict[int, int]:
        """layer -> node that computes it."""
        return {l: idx for k, l, idx in self.steps if k == "cross"}

    def start_node(self, net: PhysicalNetwork) -> int | None:
        if not self.steps:
            return None
        kind, _, idx = self.steps[0]
        return net.links[idx].u if kind == "intra" else idx


def map_path_to_physical(path: LayeredPath) -> tuple[list[list[int]], dict[int, int]]:
    """Split a layered path into per-layer link segments and a compute plan.

    Returns (segments, compute) where segments[l] lists the physical
    link ids traversed while forwarding layer-l output (layer-0 input
    for l=0) and compute maps layer -> node.
    """
    n_layers = path.n_layers
    segments: list[list[int]] = [[] for _ in range(n_layers + 1)]
    compute: dict[int, int] = {}
    for kind, layer, idx in path.steps:
        if kind == "intra":
            segments[layer].append(idx)
        else:
            compute[layer] = idx
    return segments, compute


def path_from_physical(
    net: PhysicalNetwork, segments: list[list[int]], compute: list[int]
) -> LayeredPath:
    """Inverse of map_path_to_physical.

    compute[l-1] is the node computing layer l (len == n_layers);
    segments must have n_layers + 1 entries.
    """
    if len(segments) != len(compute) + 1:
        raise MalformedPath("need one segment per layer boundary")
    steps: list[Step] = []
    for l, seg in enumerate(segments):
        steps.extend(("intra", l, e) for e in seg)
        if l < len(compute):
            steps.append(("cross", l + 1, compute[l]))
    return LayeredPath(steps=tuple(steps))


def validate_path(
    net: PhysicalNetwork, path: LayeredPath, src: int, dst: int, n_layers: int
) -> None:
    """Raise MalformedPath unless path is a walk src@layer0 -> dst@layerL."""
    node, layer = src, 0
    for kind, step_layer, idx in path.steps:
        if kind == "intra":
            if step_layer != layer:
                raise MalformedPath(f"intra step tagged layer {step_layer} while at {layer}")
            lk = net.links[idx]
            if lk.u != node:
                raise MalformedPath(f"link {idx} does not start at node {node}")
            node = lk.v
        elif kind == "cross":
            if step_layer != layer + 1:
                raise MalformedPath("cross steps must advance exactly one layer")
            if idx != node:
                raise MalformedPath(f"cross step at node {idx} while sitting at {node}")
            layer += 1
        else:
            raise MalformedPath(f"unknown step kind {kind!r}")
    if layer != n_layers:
        raise MalformedPath(f"path covers {layer} layers, expected {n_layers}")
    if node != dst:
        raise MalformedPath(f"path ends at node {node}, expected {dst}")


def is_simple_in_physical(net: PhysicalNetwork, path: LayeredPath) -> bool:
    """True if the physical projection visits no node twice.

    The one exception: a path whose final node equals its start node
    (src == dst jobs) counts as simple as long as no *other* visit
    repeats and the start node is not revisited mid-path.
    """
    if not path.steps:
        return True
    visits = [path.start_node(net)]
    for kind, _, idx in path.steps:
        if kind == "intra":
            visits.append(net.links[idx].v)
    closed = len(visits) > 1 and visits[0] == visits[-1]
    interior = visits[1:-1] if closed else visits[1:]
    seen = {visits[0]}
    for v in interior:
        if v in seen:
            return False
        seen.add(v)
    return True


# ---------------------------------------------------------------------------
# Generators and graph measures


def _geometric_layout(n: int, side_m: float, range_m: float, rng: np.random.Generator):
    """One sampling attempt: positions plus undirected in-range pairs."""
    pos = rng.uniform(0.0, side_m, size=(n, 2))
    pairs = []
    for i in range(n):
        for j in range(i + 1, n):
            if float(np.hypot(*(pos[i] - pos[j]))) <= range_m:
                pairs.append((i, j))
    return pos, pairs


def _pairs_connected(n: int, pairs: list[tuple[int, int]]) -> bool:
    adj: list[list[int]] = [[] for _ in range(n)]
    for i, j in pairs:
        adj[i].append(j)
        adj[j].append(i)
    seen = [False] * n
    seen[0] = True
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if not seen[w]:
                seen[w] = True
                queue.append(w)
    return all(seen)


def generate_random_geometric(
    n: int,
    side_m: float,
    range_m: float,
    seed: int,
    *,
    link_rate_bps: float = 1.0,
    node_rate_mm_s: float = 1.0,
    max_tries: int = 10_000,
) -> PhysicalNetwork:
    """Connected random geometric network on an [0, side]^2 area.

    Nodes are uniform in the square; every pair within range_m gets a
    bidirectional link (two directed links).  Disconnected layouts are
    resampled with a fresh child seed per attempt, so the result is a
    pure function of (n, side_m, range_m, seed).
    """
    for attempt in range(max_tries):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, attempt))))
        pos, pairs = _geometric_layout(n, side_m, range_m, rng)
        if n == 1 or _pairs_connected(n, pairs):
            nodes = tuple(
                NodeSpec(mu_mm_s=node_rate_mm_s, pos=(float(x), float(y))) for x, y in pos
            )
            links = []
            for i, j in pairs:
                links.append(LinkSpec(u=i, v=j, mu_bps=link_rate_bps))
                links.append(LinkSpec(u=j, v=i, mu_bps=link_rate_bps))
            return PhysicalNetwork(nodes=nodes, links=tuple(links))
    raise GenerationFailed(
        f"no connected layout in {max_tries} tries (n={n}, range={range_m})"
    )


def edge_connectivity(net: PhysicalNetwork) -> int:
    """Global edge connectivity of the undirected support graph."""
    g = nx.Graph()
    g.add_nodes_from(range(net.n_nodes))
    g.add_edges_from((lk.u, lk.v) for lk in net.links)
    if net.n_nodes < 2:
        return 0
    return nx.edge_connectivity(g)


_EXACT_LONGEST_LIMIT = 15


@functools.lru_cache(maxsize=256)
def _longest_hops_from(net: PhysicalNetwork, s: int) -> tuple[int, ...]:
    """Exact longest simple-path hop count from s to every node.

    Bitmask DP over visited sets; -1 marks unreachable targets.  Only
    called for networks small enough for the 2^n state space.
    """
    n = net.n_nodes
    adj_bits = [0] * n
    for lk in net.links:
        adj_bits[lk.u] |= 1 << lk.v
    reach = [0] * (1 << n)  # mask -> bitset of possible path endpoints
    reach[1 << s] = 1 << s
    best = [-1] * n
    best[s] = 0
    for mask in range(1 << n):
        ends = reach[mask]
        if not ends:
            continue
        hops = bin(mask).count("1") - 1
        e = ends
        while e:
            v = (e & -e).bit_length() - 1
            e &= e - 1
            if hops > best[v]:
                best[v] = hops
            ext = adj_bits[v] & ~mask
            while ext:
                w = (ext & -ext).bit_length() - 1
                ext &= ext - 1
                reach[mask | (1 << w)] |= 1 << w
    return tuple(best)


def hop_path_extremes(net: PhysicalNetwork, s: int, t: int) -> tuple[int, int]:
    """(shortest, longest) hop counts over simple directed paths s -> t.

    The longest count is exact up to 15 nodes and falls back to the
    trivial bound n-1 on larger networks.
    """
    if s == t:
        return (0, 0)
    dist = [-1] * net.n_nodes
    dist[s] = 0
    queue = deque([s])
    while queue:
        u = queue.popleft()
        for e in net.out_links(u):
            w = net.links[e].v
            if dist[w] < 0:
                dist[w] = dist[u] + 1
                queue.append(w)
    if dist[t] < 0:
        raise ValueError(f"no directed path {s} -> {t}")
    if net.n_nodes <= _EXACT_LONGEST_LIMIT:
        longest = _longest_hops_from(net, s)[t]
    else:
        longest = net.n_nodes - 1
    return (dist[t], longest)
