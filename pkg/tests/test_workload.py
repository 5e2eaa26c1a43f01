"""Units, model/device catalogs, and scenario generation."""

import pytest

from dnnsplit import units
from dnnsplit.topology import LinkSpec, NodeSpec
from dnnsplit.workload import (
    DnnModel,
    Scenario,
    ZeroRate,
    builtin_models,
    builtin_node_types,
    generate_scenario,
    service_time,
)


def test_unit_conventions():
    assert units.kb_to_bits(1.0) == 8 * 1024
    assert units.bits_to_kb(units.kb_to_bits(3.5)) == pytest.approx(3.5)
    assert units.mb_to_kb(1.0) == 1000.0
    assert units.mbps_to_bps(72.2) == pytest.approx(72.2e6)


def test_model_table_shapes():
    models = builtin_models()
    assert set(models) == {"smallcnn", "alexnet", "resnet"}
    for m in models.values():
        assert len(m.d_kb) == m.n_layers + 1
        assert len(m.m_kb) == m.n_layers
        assert min(m.c_mm) > 0 and min(m.m_kb) > 0 and min(m.d_kb) > 0
    assert models["smallcnn"].n_layers == 5
    assert models["alexnet"].n_layers == 8
    assert models["resnet"].n_layers == 9
    # output sizes shrink through the final classifier stages
    assert models["alexnet"].d_kb[-1] < models["alexnet"].d_kb[0]


def test_model_validation():
    with pytest.raises(ValueError):
        DnnModel(name="bad", d_kb=(1.0, 1.0), c_mm=(1.0, 1.0), m_kb=(1.0, 1.0))
    with pytest.raises(ValueError):
        DnnModel(name="bad", d_kb=(1.0, 0.0), c_mm=(1.0,), m_kb=(1.0,))


def test_model_json_roundtrip():
    m = builtin_models()["alexnet"]
    assert DnnModel.from_json("alexnet", m.to_json()) == m


def test_node_types():
    types = builtin_node_types()
    assert {t.mu_mm_s for t in types.values()} == {360.0, 480.0, 560.0}
    for t in types.values():
        assert t.mem_kb == t.mem_mb * 1000.0
        assert t.cbar_mm == 100_000.0


def test_service_time():
    assert service_time(NodeSpec(mu_mm_s=2.0), 3.0) == 1.5
    assert service_time(LinkSpec(0, 1, mu_bps=8.0), 4.0) == 0.5
    with pytest.raises(ZeroRate):
        service_time(NodeSpec(mu_mm_s=0.0), 1.0)
    with pytest.raises(TypeError):
        service_time("node", 1.0)


def test_generate_scenario_determinism():
    a = generate_scenario(10, 4, 0.5, seed=99)
    b = generate_scenario(10, 4, 0.5, seed=99)
    assert a.to_json() == b.to_json()
    c = generate_scenario(10, 4, 0.5, seed=100)
    assert a.to_json() != c.to_json()


def test_generate_scenario_contents():
    scn = generate_scenario(10, 4, 0.5, seed=99)
    assert scn.network.n_nodes == 10
    assert len(scn.jobs) == 4
    assert [j.id for j in scn.jobs] == [0, 1, 2, 3]
    names = set(builtin_models())
    rates = {t.mu_mm_s for t in builtin_node_types().values()}
    for j in scn.jobs:
        assert j.model.name in names
        assert 0 <= j.src < 10 and 0 <= j.dst < 10
    for nd in scn.network.nodes:
        assert nd.mu_mm_s in rates
    # link rates come from the 5-step ladder scaled by gamma
    step = units.mbps_to_bps(72.2 / 5) * 0.5
    for lk in scn.network.links:
        k = lk.mu_bps / step
        assert k == pytest.approx(round(k))
        assert 1 <= round(k) <= 5


def test_gamma_scales_link_rates_linearly():
    lo = generate_scenario(10, 2, 0.2, seed=31)
    hi = generate_scenario(10, 2, 2.0, seed=31)
    assert len(lo.network.links) == len(hi.network.links)
    for a, b in zip(lo.network.links, hi.network.links):
        assert (a.u, a.v) == (b.u, b.v)
        assert b.mu_bps == pytest.approx(10.0 * a.mu_bps)


def test_scenario_json_roundtrip_with_custom_model():
    scn = generate_scenario(8, 2, 1.0, seed=3)
    tiny = DnnModel(name="tiny2", d_kb=(4.0, 2.0, 1.0), c_mm=(5.0, 6.0), m_kb=(1.0, 1.0))
    jobs = (scn.jobs[0], scn.jobs[1].__class__(id=1, model=tiny, src=0, dst=1))
    custom = Scenario(network=scn.network, jobs=jobs, gamma=1.0, seed=3)
    again = Scenario.from_json(custom.to_json())
    assert again.jobs[1].model == tiny
    assert again.network == custom.network
