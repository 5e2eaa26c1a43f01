"""Routing formulations: builders, path extraction, baseline, bounds."""

import numpy as np
import pytest

from dnnsplit import units
from dnnsplit.formulations import (
    FractionalSolution,
    QueueSnapshot,
    VarIndex,
    assignment_baseline_route,
    build_service_ilp,
    build_single_job_lp,
    compute_lower_bounds,
    extract_path,
    service_objective_s,
)
from dnnsplit.linprog import SolveStatus, solve_ilp, solve_lp
from dnnsplit.sim import evaluate_path
from dnnsplit.topology import LinkSpec, NodeSpec, PhysicalNetwork, validate_path
from dnnsplit.workload import DnnModel, Job, Scenario, generate_scenario


def model_1layer(c_mm: float, d0_kb: float, d1_kb: float) -> DnnModel:
    return DnnModel(name="m1", d_kb=(d0_kb, d1_kb), c_mm=(c_mm,), m_kb=(1.0,))


def rate_kb_per_s(kb: float) -> float:
    """Link rate in bps that moves `kb` kilobytes per second."""
    return units.kb_to_bits(kb)


def test_isolated_node_service_and_waiting():
    # one node, no links: 360 MM at 360 MM/s is exactly one second
    net = PhysicalNetwork(nodes=(NodeSpec(mu_mm_s=360.0),), links=())
    job = Job(id=0, model=model_1layer(360.0, 10.0, 10.0), src=0, dst=0)
    lp, vi = build_single_job_lp(net, job, QueueSnapshot.zeros(net))
    sol = solve_lp(lp)
    assert sol.status == SolveStatus.OPTIMAL
    assert sol.objective == pytest.approx(1.0)

    # a 360 MM backlog at the node doubles the estimate
    busy = QueueSnapshot(node_mm=np.array([360.0]), link_bits=np.zeros(0))
    lp, vi = build_single_job_lp(net, job, busy)
    assert solve_lp(lp).objective == pytest.approx(2.0)


def test_two_node_offload_beats_slow_source():
    # computing at the fast neighbor costs 2s + 1s + 1s = 4s; staying
    # on the slow source costs 8s
    net = PhysicalNetwork(
        nodes=(NodeSpec(mu_mm_s=0.5), NodeSpec(mu_mm_s=4.0)),
        links=(
            LinkSpec(0, 1, rate_kb_per_s(1000.0)),
            LinkSpec(1, 0, rate_kb_per_s(1000.0)),
        ),
    )
    job = Job(id=0, model=model_1layer(4.0, 2000.0, 1000.0), src=0, dst=0)
    lp, vi = build_single_job_lp(net, job, QueueSnapshot.zeros(net))
    sol = solve_lp(lp)
    assert sol.objective == pytest.approx(4.0)
    path = extract_path(vi, sol.x, 0, 0)
    assert path.compute_plan() == {1: 1}
    validate_path(net, path, 0, 0, 1)


def test_single_job_column_count():
    net = generate_scenario(7, 1, 1.0, seed=2).network
    job = generate_scenario(7, 1, 1.0, seed=2).jobs[0]
    L = job.n_layers
    lp, vi = build_single_job_lp(net, job, QueueSnapshot.zeros(net))
    expected = (L + 1) * net.n_links + L * net.n_nodes + net.n_nodes
    assert lp.n_vars == expected == vi.n_cols


def test_service_ilp_column_count():
    scn = generate_scenario(6, 3, 1.0, seed=4)
    lp, vi = build_service_ilp(scn)
    L = scn.max_layers
    per_job = (L + 1) * scn.network.n_links + L * scn.network.n_nodes
    assert lp.n_vars == len(scn.jobs) * per_job


def test_objective_equals_evaluator_on_extracted_path():
    for seed in range(12):
        scn = generate_scenario(6, 1, 0.5, seed=seed)
        job = scn.jobs[0]
        q = QueueSnapshot.zeros(scn.network)
        lp, vi = build_single_job_lp(scn.network, job, q)
        sol = solve_lp(lp)
        assert sol.status == SolveStatus.OPTIMAL
        path = extract_path(vi, sol.x, job.src, job.dst)
        service, wait = evaluate_path(scn.network, job.model, path, q)
        assert sol.objective == pytest.approx(service + wait, abs=1e-9)


def test_extract_path_rejects_fractional_solutions():
    net = PhysicalNetwork(
        nodes=(NodeSpec(mu_mm_s=1.0), NodeSpec(mu_mm_s=1.0)),
        links=(LinkSpec(0, 1, 8192.0), LinkSpec(1, 0, 8192.0)),
    )
    vi = VarIndex.single_job(net, 1)
    x = np.full(vi.n_cols, 0.5)
    with pytest.raises(FractionalSolution):
        extract_path(vi, x, 0, 0)


def test_extract_path_strips_detached_cycle():
    # unit flow 0 --compute@0--> 0 plus a detached 1<->2 cycle in layer 0
    net = PhysicalNetwork(
        nodes=(NodeSpec(1.0), NodeSpec(1.0), NodeSpec(1.0)),
        links=(
            LinkSpec(1, 2, 8192.0),
            LinkSpec(2, 1, 8192.0),
            LinkSpec(0, 1, 8192.0),
            LinkSpec(1, 0, 8192.0),
        ),
    )
    vi = VarIndex.single_job(net, 1)
    x = np.zeros(vi.n_cols)
    x[vi.col_cross(0, 1)] = 1.0
    x[vi.col_intra(0, 0)] = 1.0  # 1 -> 2 in layer 0
    x[vi.col_intra(0, 1)] = 1.0  # 2 -> 1 in layer 0
    path = extract_path(vi, x, 0, 0)
    assert path.steps == (("cross", 1, 0),)


def test_extracted_steps_use_physical_link_ids():
    # the walk in layer 1 must reference physical links, which
    # validate_path checks by following them node by node
    net = PhysicalNetwork(
        nodes=(NodeSpec(2.0), NodeSpec(8.0), NodeSpec(1.0)),
        links=(
            LinkSpec(0, 1, rate_kb_per_s(100.0)),
            LinkSpec(1, 0, rate_kb_per_s(100.0)),
            LinkSpec(1, 2, rate_kb_per_s(100.0)),
            LinkSpec(2, 1, rate_kb_per_s(100.0)),
        ),
    )
    job = Job(id=0, model=model_1layer(8.0, 10.0, 10.0), src=0, dst=2)
    lp, vi = build_single_job_lp(net, job, QueueSnapshot.zeros(net))
    sol = solve_lp(lp)
    path = extract_path(vi, sol.x, 0, 2)
    validate_path(net, path, 0, 2, 1)
    assert path.compute_plan() == {1: 1}


def test_service_ilp_matches_single_job_lp_when_alone():
    for seed in (0, 1, 2, 3, 4):
        scn = generate_scenario(6, 1, 1.0, seed=seed)
        ilp, vi = build_service_ilp(scn, budgets=False, delta_s=0.0)
        joint = solve_ilp(ilp)
        single, _ = build_single_job_lp(
            scn.network, scn.jobs[0], QueueSnapshot.zeros(scn.network)
        )
        alone = solve_lp(single)
        assert joint.objective == pytest.approx(alone.objective, abs=1e-9)


def test_memory_budget_forces_placement():
    # node 1 is fast but too small for the layer's 100 KB of weights
    net = PhysicalNetwork(
        nodes=(
            NodeSpec(mu_mm_s=1.0, mem_kb=1000.0),
            NodeSpec(mu_mm_s=100.0, mem_kb=50.0),
        ),
        links=(
            LinkSpec(0, 1, rate_kb_per_s(1000.0)),
            LinkSpec(1, 0, rate_kb_per_s(1000.0)),
        ),
    )
    model = DnnModel(name="fat", d_kb=(1.0, 1.0), c_mm=(10.0,), m_kb=(100.0,))
    scn = Scenario(
        network=net, jobs=(Job(id=0, model=model, src=0, dst=0),), gamma=None
    )
    free, vi = build_service_ilp(scn, budgets=False, delta_s=0.0)
    sol_free = solve_ilp(free)
    assert sol_free.objective == pytest.approx(10.0 / 100.0 + 2 / 1000.0)

    lp, vi = build_service_ilp(scn, budgets=True, delta_s=0.0)
    sol = solve_ilp(lp)
    assert sol.objective == pytest.approx(10.0)  # forced onto the slow node
    path = extract_path(vi, sol.x, 0, 0)
    assert path.compute_plan() == {1: 0}


def test_compute_budget_row_is_respected():
    net = PhysicalNetwork(
        nodes=(NodeSpec(mu_mm_s=1.0), NodeSpec(mu_mm_s=100.0, cbar_mm=5.0)),
        links=(
            LinkSpec(0, 1, rate_kb_per_s(1000.0)),
            LinkSpec(1, 0, rate_kb_per_s(1000.0)),
        ),
    )
    model = model_1layer(10.0, 1.0, 1.0)  # 10 MM > 5 MM allowance at node 1
    scn = Scenario(
        network=net, jobs=(Job(id=0, model=model, src=0, dst=0),), gamma=None
    )
    lp, vi = build_service_ilp(scn, budgets=True, delta_s=0.0)
    sol = solve_ilp(lp)
    assert extract_path(vi, sol.x, 0, 0).compute_plan() == {1: 0}


def test_service_objective_strips_delta():
    scn = generate_scenario(6, 2, 1.0, seed=8)
    lp, vi = build_service_ilp(scn, delta_s=1e-6)
    sol = solve_ilp(lp)
    pure = service_objective_s(vi, scn, sol.x)
    n_edges = int(np.sum(sol.x > 0.5))
    assert sol.objective == pytest.approx(pure + 1e-6 * n_edges, abs=1e-9)


def test_baseline_route_is_valid_and_never_beats_optimum():
    for seed in range(10):
        scn = generate_scenario(7, 1, 0.5, seed=seed)
        job = scn.jobs[0]
        route = assignment_baseline_route(scn.network, job)
        validate_path(scn.network, route.path, job.src, job.dst, job.n_layers)
        service, _ = evaluate_path(
            scn.network, job.model, route.path, QueueSnapshot.zeros(scn.network)
        )
        assert route.service_s == pytest.approx(service, abs=1e-9)
        lp, _ = build_single_job_lp(
            scn.network, job, QueueSnapshot.zeros(scn.network)
        )
        best = solve_lp(lp).objective
        assert route.service_s >= best - 1e-9


def test_lower_bounds():
    scn = generate_scenario(6, 3, 1.0, seed=11)
    solo = [2.0, 4.0, 6.0]
    lb = compute_lower_bounds(scn, solo)
    comps = len(scn.network.compute_nodes()) + scn.network.n_links
    assert lb.lb_max_s == 6.0
    assert lb.lb_avg_s == pytest.approx(12.0 / comps)
    zd = compute_lower_bounds(scn, solo, zero_delay=True)
    assert zd.lb_avg_s == pytest.approx(12.0 / len(scn.network.compute_nodes()))
    with pytest.raises(ValueError):
        compute_lower_bounds(scn, [1.0])
