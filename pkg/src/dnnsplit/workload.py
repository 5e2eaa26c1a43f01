"""DNN models, device profiles, jobs, and random scenario generation.

An L-layer model is described by three per-layer tables: the data
volume d_kb emitted at each layer boundary (d_kb[0] is the raw input,
d_kb[L] the final output), the compute work c_mm of each layer in
mega-multiplications, and the memory footprint m_kb of each layer's
parameters.  Jobs pin a model to a source node (where input data sits)
and a destination node (where the output must arrive).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import topology, units


class ZeroRate(ValueError):
    """Service time requested on a component with zero rate."""


@dataclass(frozen=True)
class DnnModel:
    name: str
    d_kb: tuple[float, ...]
    c_mm: tuple[float, ...]
    m_kb: tuple[float, ...]

    def __post_init__(self):
        if len(self.d_kb) != len(self.c_mm) + 1 or len(self.c_mm) != len(self.m_kb):
            raise ValueError("need L+1 data sizes and L compute/memory entries")
        if not self.c_mm:
            raise ValueError("model needs at least one layer")
        if min(self.d_kb) <= 0 or min(self.c_mm) <= 0 or min(self.m_kb) <= 0:
            raise ValueError("model table entries must be positive")

    @property
    def n_layers(self) -> int:
        return len(self.c_mm)

    def d_bits(self, layer: int) -> float:
        return units.kb_to_bits(self.d_kb[layer])

    def to_json(self) -> dict:
        return {"d_kb": list(self.d_kb), "c_mm": list(self.c_mm), "m_kb": list(self.m_kb)}

    @staticmethod
    def from_json(name: str, obj: dict) -> "DnnModel":
        return DnnModel(
            name=name,
            d_kb=tuple(obj["d_kb"]),
            c_mm=tuple(obj["c_mm"]),
            m_kb=tuple(obj["m_kb"]),
        )


def builtin_models() -> dict[str, DnnModel]:
    """Per-layer profiles of the three benchmark CNNs."""
    smallcnn = DnnModel(
        name="smallcnn",
        d_kb=(9.41, 50.18, 12.54, 1.54, 0.77, 0.04),
        c_mm=(3.81, 20.08, 1.20, 0.07, 0.002),
        m_kb=(19.20, 409.60, 4816.90, 294.91, 7.68),
    )
    alexnet = DnnModel(
        name="alexnet",
        d_kb=(618.35, 279.94, 173.06, 259.58, 259.58, 36.86, 16.38, 16.38, 4.00),
        c_mm=(105.73, 224.34, 149.52, 112.14, 74.84, 37.75, 16.78, 4.10),
        m_kb=(139.78, 1229.82, 3540.48, 2655.74, 1770.50, 151011.39, 67125.25, 16388.00),
    )
    resnet = DnnModel(
        name="resnet",
        d_kb=(602.12, 802.82, 802.82, 200.71, 50.18, 50.18, 50.18, 50.18, 12.54, 4.00),
        c_mm=(118.01, 616.56, 757.86, 950.53, 1156.06, 1156.06, 1156.06, 565.18, 2.20),
        m_kb=(37.63, 786.43, 2228.22, 21757.95, 26738.69, 26738.69, 26738.69, 51380.22, 8388.61),
    )
    return {m.name: m for m in (smallcnn, alexnet, resnet)}


@dataclass(frozen=True)
class NodeType:
    """A device profile: compute rate, memory, and compute budget."""

    name: str
    mu_mm_s: float
    mem_mb: float
    cbar_mm: float

    @property
    def mem_kb(self) -> float:
        return units.mb_to_kb(self.mem_mb)


def builtin_node_types() -> dict[str, NodeType]:
    """The three single-board device profiles used in experiments."""
    types = (
        NodeType(name="opz", mu_mm_s=360.0, mem_mb=524.288, cbar_mm=100_000.0),
        NodeType(name="bai", mu_mm_s=480.0, mem_mb=131.072, cbar_mm=100_000.0),
        NodeType(name="rp3", mu_mm_s=560.0, mem_mb=524.288, cbar_mm=100_000.0),
    )
    return {t.name: t for t in types}


@dataclass(frozen=True)
class Job:
    id: int
    model: DnnModel
    src: int
    dst: int

    @property
    def n_layers(self) -> int:
        return self.model.n_layers


@dataclass(frozen=True)
class Scenario:
    network: topology.PhysicalNetwork
    jobs: tuple[Job, ...]
    gamma: float | None = None
    seed: int | None = None

    @property
    def max_layers(self) -> int:
        return max(j.n_layers for j in self.jobs)

    def to_json(self) -> dict:
        builtin = builtin_models()
        custom = {}
        for j in self.jobs:
            if builtin.get(j.model.name) != j.model:
                custom[j.model.name] = j.model.to_json()
        obj = {
            "params": {
                "n": self.network.n_nodes,
                "jobs": len(self.jobs),
                "gamma": self.gamma,
                "seed": self.seed,
            },
            "network": self.network.to_json(),
            "jobs": [
                {"id": j.id, "model": j.model.name, "src": j.src, "dst": j.dst}
                for j in self.jobs
            ],
        }
        if custom:
            obj["models"] = custom
        return obj

    @staticmethod
    def from_json(obj: dict) -> "Scenario":
        catalog = dict(builtin_models())
        for name, spec in obj.get("models", {}).items():
            catalog[name] = DnnModel.from_json(name, spec)
        net = topology.PhysicalNetwork.from_json(obj["network"])
        jobs = tuple(
            Job(id=r["id"], model=catalog[r["model"]], src=r["src"], dst=r["dst"])
            for r in obj["jobs"]
        )
        params = obj.get("params", {})
        return Scenario(
            network=net, jobs=jobs, gamma=params.get("gamma"), seed=params.get("seed")
        )


def service_time(component, amount: float) -> float:
    """Seconds a component needs to serve `amount` of work.

    `component` is a NodeSpec (amount in MM) or LinkSpec (amount in
    bits).  Rates of zero have no defined service time.
    """
    if isinstance(component, topology.NodeSpec):
        rate = component.mu_mm_s
    elif isinstance(component, topology.LinkSpec):
        rate = component.mu_bps
    else:
        raise TypeError(f"not a network component: {component!r}")
    if rate <= 0:
        raise ZeroRate(f"component {component!r} has zero service rate")
    return amount / rate


# ---------------------------------------------------------------------------
# Random scenarios

SIDE_M = 30.0
RANGE_M = 7.5
# Per-direction link rates are k * gamma * (72.2/5) Mbps with k uniform
# in 1..5, i.e. gamma=1 tops out at the nominal 72.2 Mbps radio rate.
RATE_STEP_MBPS = 72.2 / 5


def _rng(seed_key) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed_key)))


def generate_scenario(
    n: int,
    n_jobs: int,
    gamma: float,
    seed: int,
    *,
    symmetric_rates: bool = False,
    side_m: float = SIDE_M,
    range_m: float = RANGE_M,
    max_tries: int = 10_000,
) -> Scenario:
    """Random connected deployment plus a random job batch.

    Geometry: n nodes uniform on a side_m square, links between pairs
    within range_m, resampled until connected.  Each link direction
    draws an independent rate class unless symmetric_rates is set.
    Node hardware types and job models are uniform over the builtin
    tables; job endpoints are uniform and may coincide.  Fully
    deterministic in `seed`.
    """
    pos = pairs = None
    for attempt in range(max_tries):
        rng = _rng((seed, 0, attempt))
        pos, pairs = topology._geometric_layout(n, side_m, range_m, rng)
        if n == 1 or topology._pairs_connected(n, pairs):
            break
    else:
        raise topology.GenerationFailed(
            f"no connected layout in {max_tries} tries (n={n}, range={range_m})"
        )

    rng_net = _rng((seed, 1))
    type_table = list(builtin_node_types().values())
    nodes = []
    for u in range(n):
        t = type_table[int(rng_net.integers(0, len(type_table)))]
        nodes.append(
            topology.NodeSpec(
                mu_mm_s=t.mu_mm_s,
                mem_kb=t.mem_kb,
                cbar_mm=t.cbar_mm,
                pos=(float(pos[u][0]), float(pos[u][1])),
            )
        )
    links = []
    for i, j in pairs:
        k_fwd = int(rng_net.integers(1, 6))
        k_bwd = k_fwd if symmetric_rates else int(rng_net.integers(1, 6))
        rate_fwd = units.mbps_to_bps(k_fwd * gamma * RATE_STEP_MBPS)
        rate_bwd = units.mbps_to_bps(k_bwd * gamma * RATE_STEP_MBPS)
        links.append(topology.LinkSpec(u=i, v=j, mu_bps=rate_fwd))
        links.append(topology.LinkSpec(u=j, v=i, mu_bps=rate_bwd))
    net = topology.PhysicalNetwork(nodes=tuple(nodes), links=tuple(links))

    rng_jobs = _rng((seed, 2))
    model_table = list(builtin_models().values())
    jobs = []
    for jid in range(n_jobs):
        model = model_table[int(rng_jobs.integers(0, len(model_table)))]
        src = int(rng_jobs.integers(0, n))
        dst = int(rng_jobs.integers(0, n))
        jobs.append(Job(id=jid, model=model, src=src, dst=dst))
    return Scenario(network=net, jobs=tuple(jobs), gamma=gamma, seed=seed)
