"""Fictitious estimates vs. the event-driven actual system."""

import io

import pytest

from dnnsplit import policies
from dnnsplit.sim import c_max, fictitious_completion, simulate_actual
from dnnsplit.topology import LayeredPath, LinkSpec, NodeSpec, PhysicalNetwork
from dnnsplit.workload import DnnModel, Job
from dnnsplit.verify import dominance_instance


def one_layer(c_mm: float, d0_kb: float = 1.0, d1_kb: float = 1.0) -> DnnModel:
    return DnnModel(name="m", d_kb=(d0_kb, d1_kb), c_mm=(c_mm,), m_kb=(1.0,))


COMPUTE_HERE = LayeredPath(steps=(("cross", 1, 0),))


def test_single_node_sequential_jobs():
    net = PhysicalNetwork(nodes=(NodeSpec(mu_mm_s=1.0),), links=())
    routed = [
        (Job(id=0, model=one_layer(2.0), src=0, dst=0), COMPUTE_HERE),
        (Job(id=1, model=one_layer(3.0), src=0, dst=0), COMPUTE_HERE),
    ]
    # higher priority computes 2 MM first, then the 3 MM job: 2 and 5
    assert fictitious_completion(net, routed) == pytest.approx([2.0, 5.0])
    done, log = simulate_actual(net, routed)
    assert done == pytest.approx({0: 2.0, 1: 5.0})
    # flipping priorities flips who waits
    flipped = [routed[1], routed[0]]
    assert fictitious_completion(net, flipped) == pytest.approx([3.0, 5.0])
    done, _ = simulate_actual(net, flipped)
    assert done == pytest.approx({1: 3.0, 0: 5.0})


def preemption_fixture():
    # two nodes joined by a slow link moving 1 KB per second
    net = PhysicalNetwork(
        nodes=(NodeSpec(mu_mm_s=1.0), NodeSpec(mu_mm_s=1.0)),
        links=(LinkSpec(0, 1, 8192.0),),
    )
    offload = LayeredPath(steps=(("intra", 0, 0), ("cross", 1, 1)))
    hi = Job(id=0, model=one_layer(2.0, d0_kb=1.0), src=0, dst=1)
    lo = Job(id=1, model=one_layer(10.0, d0_kb=4.0), src=0, dst=1)
    return net, [(hi, offload), (lo, offload)]


def test_actual_beats_fictitious_under_partial_overlap():
    net, routed = preemption_fixture()
    # timeline: hi transfer [0,1], hi compute [1,3]
    #           lo transfer [1,5] (link busy first), lo compute [5,15]
    done, log = simulate_actual(net, routed)
    assert done == pytest.approx({0: 3.0, 1: 15.0})
    # fictitious charges lo the full backlog (1s link + 2s compute)
    # even though hi's compute is long gone when lo shows up
    fict = fictitious_completion(net, routed)
    assert fict == pytest.approx([3.0, 17.0])
    assert done[1] < fict[1]


def test_zero_delay_ignores_links():
    net, routed = preemption_fixture()
    done, _ = simulate_actual(net, routed, zero_delay=True)
    assert done == pytest.approx({0: 2.0, 1: 12.0})
    assert fictitious_completion(net, routed, zero_delay=True) == pytest.approx(
        [2.0, 12.0]
    )


def test_event_log_well_formed():
    net, routed = preemption_fixture()
    _, log = simulate_actual(net, routed)
    buf = io.StringIO()
    log.to_csv(buf)
    lines = buf.getvalue().strip().split("\n")
    assert lines[0] == "time_s,component,kind,job,event"
    assert len(lines) == len(log.rows) + 1

    last_t = 0.0
    open_tasks: dict[tuple[str, int], str] = {}
    for t, comp, kind, job, event in log.rows:
        assert t >= last_t - 1e-12
        last_t = max(last_t, t)
        key = (comp, job)
        if event in ("start", "resume"):
            assert open_tasks.get(key) != "running"
            open_tasks[key] = "running"
        elif event == "pause":
            assert open_tasks.get(key) == "running"
            open_tasks[key] = "paused"
        elif event == "finish":
            assert open_tasks.get(key) == "running"
            open_tasks[key] = "done"
    assert all(state == "done" for state in open_tasks.values())


def test_c_max():
    assert c_max({0: 3.0, 1: 15.0}) == 15.0


def test_dominance_on_random_instances():
    for i in range(10):
        scn = dominance_instance(424242, i)
        plan = policies.greedy_route(scn)
        policies.attach_actual(scn, plan)
        for e in plan.entries:
            assert e.c_actual_s <= e.c_fict_s + 1e-9
