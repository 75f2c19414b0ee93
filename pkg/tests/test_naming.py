import pytest
from hypothesis import given, settings, strategies as st

from kdag.graph import ConnectivityGraph, DagKind, SpanningDag, build_spd, extract_spt
from kdag.naming import naming_oracle, next_hop, route_to, run_naming

from conftest import small_instances


def star_tree(n):
    return SpanningDag.from_parents([[]] + [[0]] * n, [0] + [1] * n, DagKind.SPT)


def test_star_ids_follow_child_order():
    t = naming_oracle(star_tree(3))
    assert t.id == (0, 1, 2, 3)
    assert t.subtree_size == (3, 1, 1, 1)
    assert t.id_range[0] == (0, 3)


def test_chain_ids():
    spt = SpanningDag.from_parents([[], [0], [1], [2]], [0, 1, 2, 3], DagKind.SPT)
    t = naming_oracle(spt)
    assert t.id == (0, 1, 2, 3)
    assert t.id_range[1:] == ((1, 3), (2, 3), (3, 3))


def test_dfs_preorder_small():
    # 0 -> {1, 2}; 1 -> {3, 4}; 2 -> {5}
    spt = SpanningDag.from_parents([[], [0], [0], [1], [1], [2]], [0, 1, 1, 2, 2, 2],
                                   DagKind.SPT)
    t = naming_oracle(spt)
    assert t.id == (0, 1, 4, 2, 3, 5)
    assert t.id_range[1] == (1, 3) and t.id_range[2] == (4, 5)


def test_run_naming_rejects_non_tree():
    g = ConnectivityGraph.from_positions([(0, 0), (-1, -1), (1, -1), (0, -2)], 1.5)
    with pytest.raises(ValueError):
        run_naming(build_spd(g), g)


@pytest.mark.parametrize("seed", range(6))
def test_distributed_matches_oracle(seed):
    for g in small_instances(5, seed0=seed * 10):
        spt = extract_spt(build_spd(g))
        assert run_naming(spt, g, seed=seed) == naming_oracle(spt)


def tree_path(spt, a, b):
    """Hops from a to b through their lowest common ancestor (a excluded)."""
    up_a = [a]
    while up_a[-1] != 0:
        up_a.append(spt.parents[up_a[-1]][0])
    up_b = [b]
    while up_b[-1] != 0:
        up_b.append(spt.parents[up_b[-1]][0])
    common = next(x for x in up_a if x in set(up_b))
    head = up_a[1:up_a.index(common) + 1]
    tail = list(reversed(up_b[:up_b.index(common)]))
    return head + tail


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 400), st.data())
def test_route_is_tree_path(seed, data):
    g = small_instances(1, n_range=(8, 30), seed0=seed)[0]
    spt = extract_spt(build_spd(g))
    table = naming_oracle(spt)
    a = data.draw(st.integers(0, g.n))
    b = data.draw(st.integers(0, g.n))
    assert route_to(table, spt, a, table.id[b]) == tree_path(spt, a, b)


def test_ranges_partition_ids(random_graphs):
    for g in random_graphs:
        spt = extract_spt(build_spd(g))
        t = naming_oracle(spt)
        assert sorted(t.id) == list(range(g.num_nodes))
        for v in range(1, g.num_nodes):
            lo, hi = t.id_range[v]
            kids = spt.children[v]
            covered = sorted(i for c in kids for i in range(t.id_range[c][0], t.id_range[c][1] + 1))
            assert covered == list(range(lo + 1, hi + 1))
            assert t.owner_of(t.id[v]) == v


def test_out_of_range_target():
    spt = star_tree(2)
    t = naming_oracle(spt)
    with pytest.raises(ValueError):
        route_to(t, spt, 1, 7)
    with pytest.raises(ValueError):
        next_hop(t, spt, 0, 9)
