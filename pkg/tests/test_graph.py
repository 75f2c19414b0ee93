import math

import pytest
from hypothesis import given, settings, strategies as st

from kdag.graph import (BASE, ConnectivityFailure, ConnectivityGraph, DagKind, SpanningDag,
                        build_spd, derive_seed, extract_spt, generate_instance,
                        path_length_range)
from kdag.sim import run_distributed_spd

from conftest import CASCADE_EDGES, all_paths_lengths

points = st.lists(st.tuples(st.floats(0, 100), st.floats(0, 100)), min_size=1, max_size=25)


def test_single_sensor_forced_adjacent():
    g = generate_instance(1, 10, 50, seed=4)
    assert g.num_nodes == 2 and g.adjacency[0] == {1}


def test_fifty_nodes_repeatable():
    a = generate_instance(50, 100, 50, seed=11)
    b = generate_instance(50, 100, 50, seed=11)
    assert a.num_nodes == 51 and a.is_connected()
    assert a.adjacency == b.adjacency and a.positions == b.positions


def test_sparse_instance_gives_up():
    with pytest.raises(ConnectivityFailure):
        generate_instance(2, 1000, 1, seed=0)


def test_generate_rejects_bad_args():
    with pytest.raises(ValueError):
        generate_instance(0, 10, 5, seed=0)


def test_positions_inside_square():
    g = generate_instance(30, 80, 40, seed=2)
    assert all(0 <= x <= 80 and 0 <= y <= 80 for x, y in g.positions)


def test_derive_seed_stable():
    assert derive_seed(1, "a") == derive_seed(1, "a") != derive_seed(1, "b")
    assert 0 <= derive_seed(0) < 2**63


def test_cascade_adjacency(cascade_graph):
    assert cascade_graph.edges() == CASCADE_EDGES


@settings(max_examples=60, deadline=None)
@given(points, st.floats(1, 60))
def test_unit_disk_rule(pts, r):
    g = ConnectivityGraph.from_positions(pts, r)
    for i in range(len(pts)):
        for j in range(len(pts)):
            expect = i != j and math.dist(pts[i], pts[j]) <= r
            assert (j in g.adjacency[i]) == expect


@settings(max_examples=40, deadline=None)
@given(points, st.floats(1, 60), st.integers(0, 2**31))
def test_json_round_trip_exact(pts, r, seed):
    g = ConnectivityGraph.from_positions(pts, r, side=100.0, seed=seed)
    back = ConnectivityGraph.from_json(g.to_json())
    assert back == g
    assert back.to_json() == g.to_json()


def test_json_rejects_wrong_n():
    g = generate_instance(5, 30, 20, seed=0)
    bad = g.to_json().replace('"n": 5', '"n": 6')
    with pytest.raises(ValueError):
        ConnectivityGraph.from_json(bad)


def test_spd_on_path():
    g = ConnectivityGraph.from_positions([(0, 0), (1, 0), (2, 0), (3, 0)], 1.0)
    spd = build_spd(g)
    assert spd.parents == ((), (0,), (1,), (2,))
    assert spd.depth == (0, 1, 2, 3)


def test_spd_diamond_keeps_both_parents():
    # 0 at top, 1 and 2 one hop away, 3 adjacent to both but not to 0
    g = ConnectivityGraph.from_positions([(0, 0), (-1, -1), (1, -1), (0, -2)], 1.5)
    spd = build_spd(g)
    assert spd.parents[3] == (1, 2)
    assert extract_spt(spd).parents[3] == (1,)
    assert spd.path_length_range(3) == (2, 2)


def test_spd_requires_connectivity():
    g = ConnectivityGraph.from_positions([(0, 0), (10, 0)], 1.0)
    with pytest.raises(ConnectivityFailure):
        build_spd(g)


def test_spd_maximal_and_exact(random_graphs):
    for g in random_graphs:
        spd = build_spd(g)
        spd.validate(g)
        dist = g.hop_distances()
        assert list(spd.depth) == dist
        for v in range(1, g.num_nodes):
            # every neighbour one hop closer is a parent
            assert set(spd.parents[v]) == {u for u in g.adjacency[v] if dist[u] == dist[v] - 1}
            s, l = spd.path_length_range(v)
            assert s == l == dist[v]


def test_spt_is_tree(random_graphs):
    for g in random_graphs:
        spt = extract_spt(build_spd(g))
        spt.validate(g)
        assert spt.edge_count == g.n
        assert all(p == (min(q),) for p, q in zip(spt.parents[1:], build_spd(g).parents[1:]))


def test_distributed_spd_matches(random_graphs):
    for i, g in enumerate(random_graphs):
        dspd, _ = run_distributed_spd(g, seed=i)
        assert dspd == build_spd(g)


def test_validate_catches_cycle():
    parents = [[], [0, 2], [1]]
    dag = SpanningDag.from_parents(parents, [0, 1, 2], DagKind.KDAG)
    with pytest.raises(ValueError):
        dag.validate()


def test_validate_catches_orphan_and_depth():
    with pytest.raises(ValueError):
        SpanningDag.from_parents([[], [0], []], [0, 1, 2], DagKind.KDAG).validate()
    with pytest.raises(ValueError):
        SpanningDag.from_parents([[], [0], [0, 1]], [0, 1, 1], DagKind.SPD).validate()


def test_path_ranges_match_enumeration():
    # 0 -> 1 -> 2 -> 3, plus 3 also hangs from 1 directly
    parents = [[], [0], [1], [1, 2]]
    dag = SpanningDag.from_parents(parents, [0, 1, 2, 2], DagKind.KDAG)
    for v in range(1, 4):
        lens = all_paths_lengths(dag, v)
        assert path_length_range(dag, v) == (min(lens), max(lens))
    assert dag.max_slack() == 1 and dag.max_path_length() == 3
    assert dag.descendants(1) == {1, 2, 3}
    assert dag.base_children == (1,)
