"""Physical network, layered graph, and path mapping."""

import numpy as np
import pytest

from dnnsplit.topology import (
    LayeredGraph,
    LayeredPath,
    LinkSpec,
    MalformedPath,
    NodeSpec,
    PhysicalNetwork,
    edge_connectivity,
    generate_random_geometric,
    hop_path_extremes,
    is_simple_in_physical,
    map_path_to_physical,
    path_from_physical,
    validate_path,
)


def line3() -> PhysicalNetwork:
    """0 -> 1 -> 2, all compute-capable."""
    return PhysicalNetwork(
        nodes=(NodeSpec(mu_mm_s=1.0), NodeSpec(mu_mm_s=2.0), NodeSpec(mu_mm_s=1.0)),
        links=(LinkSpec(0, 1, 100.0), LinkSpec(1, 2, 100.0)),
    )


def test_spec_validation():
    with pytest.raises(ValueError):
        NodeSpec(mu_mm_s=-1.0)
    with pytest.raises(ValueError):
        LinkSpec(0, 1, 0.0)
    with pytest.raises(ValueError):
        LinkSpec(2, 2, 1.0)
    with pytest.raises(ValueError):
        LinkSpec(0, 1, 5.0, q_bits=-2.0)


def test_network_lookup_helpers():
    net = line3()
    assert net.n_nodes == 3 and net.n_links == 2
    assert net.link_id(0, 1) == 0
    assert net.link_id(1, 0) is None
    assert net.out_links(1) == (1,)
    assert net.in_links(2) == (1,)
    assert net.compute_nodes() == [0, 1, 2]


def test_network_json_roundtrip():
    net = line3()
    again = PhysicalNetwork.from_json(net.to_json())
    assert again == net


def test_layered_graph_counts_and_components():
    net = line3()
    g = LayeredGraph(net, 2)
    # 3 layers x 3 nodes, 3 layers x 2 links intra, 2 layers x 3 nodes cross
    assert g.n_vertices == 9
    assert g.n_intra == 6
    assert g.n_edges == 12
    for eid in range(g.n_edges):
        kind, idx, layer = g.edge_component(eid)
        a, b = g.edge_endpoints(eid)
        if kind == "link":
            assert not g.is_cross(eid)
            assert g.vertex_layer(a) == g.vertex_layer(b) == layer
            assert g.vertex_node(a) == net.links[idx].u
            assert g.vertex_node(b) == net.links[idx].v
            assert g.rate(eid) == net.links[idx].mu_bps
        else:
            assert g.is_cross(eid)
            assert g.vertex_node(a) == g.vertex_node(b) == idx
            assert g.vertex_layer(b) == g.vertex_layer(a) + 1 == layer
            assert g.rate(eid) == net.nodes[idx].mu_mm_s
    # adjacency is consistent with endpoints
    for v in range(g.n_vertices):
        for eid in g.out_edges(v):
            assert g.edge_endpoints(eid)[0] == v
        for eid in g.in_edges(v):
            assert g.edge_endpoints(eid)[1] == v


def test_path_mapping_roundtrip():
    net = line3()
    # layer 0: hop 0->1, compute layer 1 at node 1, layer 1: hop 1->2
    path = LayeredPath(steps=(("intra", 0, 0), ("cross", 1, 1), ("intra", 1, 1)))
    validate_path(net, path, 0, 2, 1)
    segments, compute = map_path_to_physical(path)
    assert segments == [[0], [1]]
    assert compute == {1: 1}
    again = path_from_physical(net, segments, [1])
    assert again == path


def test_validate_path_rejects_broken_walks():
    net = line3()
    with pytest.raises(MalformedPath):
        # link 1 starts at node 1, not at the source 0
        validate_path(net, LayeredPath(steps=(("intra", 0, 1),)), 0, 2, 0)
    with pytest.raises(MalformedPath):
        # cross step at a node we are not sitting on
        validate_path(net, LayeredPath(steps=(("cross", 1, 2),)), 0, 0, 1)
    with pytest.raises(MalformedPath):
        # covers no layers but one was promised
        validate_path(net, LayeredPath(steps=()), 0, 0, 1)


def test_simplicity_check():
    net = PhysicalNetwork(
        nodes=(NodeSpec(1.0), NodeSpec(1.0)),
        links=(LinkSpec(0, 1, 1.0), LinkSpec(1, 0, 1.0)),
    )
    fwd = LayeredPath(steps=(("intra", 0, 0), ("cross", 1, 1)))
    assert is_simple_in_physical(net, fwd)
    # 0 -> 1, compute, 1 -> 0: closed walk back to the source is allowed
    closed = LayeredPath(steps=(("intra", 0, 0), ("cross", 1, 1), ("intra", 1, 1)))
    assert is_simple_in_physical(net, closed)
    # 0 -> 1 -> 0 -> 1 revisits node 1: not simple
    zigzag = LayeredPath(
        steps=(("intra", 0, 0), ("intra", 0, 1), ("intra", 0, 0), ("cross", 1, 1))
    )
    assert not is_simple_in_physical(net, zigzag)


def test_generate_random_geometric_is_deterministic_and_connected():
    a = generate_random_geometric(12, 30.0, 7.5, seed=5)
    b = generate_random_geometric(12, 30.0, 7.5, seed=5)
    assert a == b
    assert a.n_nodes == 12
    # links exist exactly between nodes within range, both directions
    pos = [nd.pos for nd in a.nodes]
    pairs = {(lk.u, lk.v) for lk in a.links}
    for u, v in pairs:
        assert (v, u) in pairs
        d = float(np.hypot(pos[u][0] - pos[v][0], pos[u][1] - pos[v][1]))
        assert d <= 7.5
    # connectivity was enforced during generation
    reached = {0}
    frontier = [0]
    while frontier:
        u = frontier.pop()
        for e in a.out_links(u):
            w = a.links[e].v
            if w not in reached:
                reached.add(w)
                frontier.append(w)
    assert reached == set(range(12))


def test_edge_connectivity_known_graphs():
    assert edge_connectivity(line3()) == 1
    n = 4
    links = tuple(
        LinkSpec(u, v, 1.0) for u in range(n) for v in range(n) if u != v
    )
    k4 = PhysicalNetwork(nodes=tuple(NodeSpec(1.0) for _ in range(n)), links=links)
    assert edge_connectivity(k4) == 3


def test_hop_path_extremes():
    # triangle: direct hop or the long way round
    nodes = tuple(NodeSpec(1.0) for _ in range(3))
    links = tuple(
        LinkSpec(u, v, 1.0) for u in range(3) for v in range(3) if u != v
    )
    net = PhysicalNetwork(nodes=nodes, links=links)
    short, long_ = hop_path_extremes(net, 0, 1)
    assert short == 1
    assert long_ == 2
    assert hop_path_extremes(line3(), 0, 2) == (2, 2)
