import itertools

import networkx as nx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ripple_sim.topology import (
    EdgeCloud,
    InsufficientResources,
    LinkKind,
    NodeKind,
    ResourceVector,
    SubstrateNetwork,
    TopologyError,
    build_city_grid,
    build_tree,
)


def as_graph(net):
    g = nx.Graph()
    g.add_nodes_from(net.nodes)
    g.add_edges_from(net.links)
    return g


def test_evaluation_tree_shape(tree16):
    assert len(tree16.nodes) == 21
    assert len(tree16.links) == 20
    assert all(l.kind is LinkKind.WIRED for l in tree16.links.values())
    assert all(n.edge_cloud.capacity == ResourceVector(5, 8, 10) for n in tree16.nodes.values())
    assert tree16.bs_set == tuple(range(16))
    assert tree16.nodes[20].kind is NodeKind.ROOT


def test_minimal_tree_is_a_chain():
    net = build_tree(1, 1, [(0.0, 0.0)], ResourceVector(1, 1, 1))
    assert sorted(net.links) == [(0, 1), (1, 2)]
    assert net.hop_path(0, 2) == [0, 1, 2]


def test_four_bs_two_mux_adjacency():
    net = build_tree(4, 2, [(0, 0), (1, 0), (0, 1), (1, 1)], ResourceVector(2, 2, 2))
    expected = {(0, 4), (1, 4), (2, 5), (3, 5), (4, 6), (5, 6)}
    assert set(net.links) == expected
    assert len(net.nodes) == 7


def test_tree_builder_errors():
    with pytest.raises(TopologyError):
        build_tree(5, 2, [(i, 0) for i in range(5)], ResourceVector(1, 1, 1))
    with pytest.raises(TopologyError):
        build_tree(2, 1, [(0, 0), (0, 0)], ResourceVector(1, 1, 1))
    with pytest.raises(TopologyError):
        build_tree(2, 1, [(0, 0)], ResourceVector(1, 1, 1))


def test_city_grids():
    one = build_city_grid(1, 1, 100.0, ResourceVector(8, 10, 12))
    assert len(one.nodes) == 2
    two = build_city_grid(2, 2, 100.0, ResourceVector(8, 10, 12))
    assert len(two.bs_set) == 4 and len(two.mux_set) == 2
    assert (4, 5) in two.links
    big = build_city_grid(4, 10, 100.0, ResourceVector(8, 10, 12))
    assert len(big.bs_set) == 40
    assert big.edge_cloud(0).capacity == ResourceVector(8, 10, 12)
    with pytest.raises(TopologyError):
        build_city_grid(0, 3, 100.0, ResourceVector(1, 1, 1))


def test_hop_paths_match_bfs(tree16):
    g = as_graph(tree16)
    assert tree16.hop_path(3, 3) == [3]
    assert tree16.hop_path(0, 1) == [0, 16, 1]
    path = tree16.hop_path(0, 15)
    assert len(path) == 5 and 20 in path
    for a, b in itertools.combinations(tree16.nodes, 2):
        assert len(tree16.hop_path(a, b)) - 1 == nx.shortest_path_length(g, a, b)
        assert len(tree16.hop_path(a, b)) == len(tree16.hop_path(b, a))


def test_hop_path_ties_prefer_low_ids():
    net = build_city_grid(3, 2, 100.0, ResourceVector(1, 1, 1))
    # BS 0 (row 0) to BS 5 (row 2): only one shortest path along the mux chain
    assert net.hop_path(0, 5) == [0, 6, 7, 8, 5]


def test_distinct_mux_paths_cross_root(tree16):
    for a in tree16.bs_set:
        for b in tree16.bs_set:
            if a // 4 != b // 4:
                assert 20 in tree16.hop_path(a, b)


def test_disconnected_network_rejected():
    text = "node 0 bs 0 0 1 1 1\nnode 1 bs 5 0 1 1 1\n"
    with pytest.raises(TopologyError):
        SubstrateNetwork.from_text(text)


def test_text_round_trip(tree16):
    again = SubstrateNetwork.from_text(tree16.to_text())
    assert again.to_text() == tree16.to_text()
    assert set(again.links) == set(tree16.links)
    assert again.bs_positions().tolist() == tree16.bs_positions().tolist()


def test_edge_cloud_rejects_overcommit():
    ec = EdgeCloud(ResourceVector(1, 1, 1))
    ec.reserve(ResourceVector(1, 0, 1))
    with pytest.raises(InsufficientResources):
        ec.reserve(ResourceVector(1, 0, 0))
    with pytest.raises(ValueError):
        ec.release(ResourceVector(0, 1, 0))


vectors = st.builds(ResourceVector, st.integers(0, 5), st.integers(0, 5), st.integers(0, 5))


@given(st.lists(vectors, max_size=8))
def test_reserve_release_pairs_conserve_capacity(amounts):
    ec = EdgeCloud(ResourceVector(20, 20, 20))
    before = ec.in_use
    done = []
    for a in amounts:
        if ec.can_reserve(a):
            ec.reserve(a)
            done.append(a)
        assert ec.in_use.is_nonnegative() and ec.in_use.fits_in(ec.capacity)
    for a in reversed(done):
        ec.release(a)
    assert ec.in_use == before
