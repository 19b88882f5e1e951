import itertools

import networkx as nx
from hypothesis import given
from hypothesis import strategies as st

from ripple_sim.linkmap import Embedding, MissingVnf, embed_links, running_index
from ripple_sim.topology import ResourceVector, block_grid_positions, build_tree

VNFS = ("v0", "v1", "v2", "v3")
NET = build_tree(16, 4, block_grid_positions(4, 4, 2, 2, 200.0), ResourceVector(5, 8, 10))


def test_colocated_chain_stays_at_the_base_station(tree16):
    emb = embed_links(0, 5, VNFS, tree16, {v: {5} for v in VNFS})
    assert isinstance(emb, Embedding)
    assert emb.total_path == (5,)
    assert all(h.segment == () for h in emb.hops)
    assert emb.clouds == (5, 5, 5, 5)


def test_head_at_bs_and_tail_at_parent_is_one_hop(tree16):
    parent = next(n for n in tree16.adjacency[5] if n in tree16.mux_set)
    emb = embed_links(0, 5, ("h", "t"), tree16, {"h": {5}, "t": {parent}})
    assert [h.segment for h in emb.hops] == [(), (parent,)]
    assert emb.total_path == tuple(nx.shortest_path(_graph(tree16), 5, parent))


def test_absent_layer_is_named(tree16):
    running = {"v0": {5}, "v1": {16}, "v3": {20}}
    assert embed_links(7, 5, VNFS, tree16, running) == MissingVnf(7, "v2", 2)
    assert embed_links(7, 5, VNFS, tree16, {**running, "v2": set()}) == MissingVnf(7, "v2", 2)


def test_equally_close_instances_go_to_the_lowest_id(tree16):
    emb = embed_links(0, 0, ("x",), tree16, {"x": {3, 2, 1}})
    assert emb.clouds == (1,)


def test_running_index_groups_by_type():
    assert running_index([("a", 1), ("b", 2), ("a", 3)]) == {"a": {1, 3}, "b": {2}}


def _graph(net):
    g = nx.Graph()
    g.add_edges_from(net.links)
    return g


placements = st.dictionaries(
    st.sampled_from(VNFS), st.sets(st.integers(0, 20), min_size=1, max_size=4), min_size=4, max_size=4
)


@given(placements, st.integers(0, 15))
def test_each_segment_is_a_shortest_hop_to_its_type(running, bs):
    dist = dict(nx.all_pairs_shortest_path_length(_graph(NET)))
    emb = embed_links(0, bs, VNFS, NET, running)
    cur = bs
    for hop in emb.hops:
        # exhaustive: no instance of the type is strictly closer
        assert len(hop.segment) == min(dist[cur][c] for c in running[hop.vnf_type])
        assert len(hop.segment) == dist[cur][hop.cloud]
        cur = hop.cloud
    # order preservation: the path walks through every chosen cloud in chain order
    path = list(emb.total_path)
    pos = 0
    for hop in emb.hops:
        pos = path.index(hop.cloud, pos)
    assert emb.vnfs == VNFS
    assert all(b in NET.adjacency[a] for a, b in itertools.pairwise(path))


@given(placements, st.integers(0, 15))
def test_unchanged_instances_give_an_unchanged_embedding(running, bs):
    copy = {v: set(sorted(cs, reverse=True)) for v, cs in reversed(list(running.items()))}
    assert embed_links(0, bs, VNFS, NET, running) == embed_links(0, bs, VNFS, NET, copy)
