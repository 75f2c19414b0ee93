import pytest
from hypothesis import given, settings, strategies as st

from kdag.graph import ConnectivityGraph, DagKind, SpanningDag, build_spd
from kdag.load import EmptyChildren, balance_factor, compute_load_oracle, run_load_calc

from conftest import exact_loads, small_instances


def fan_in():
    # 1 and 2 hang off the base; 3 and 4 each have both as parents
    parents = [[], [0], [0], [1, 2], [1, 2]]
    return SpanningDag.from_parents(parents, [0, 1, 1, 2, 2], DagKind.SPD)


def test_fan_in_loads():
    lm = compute_load_oracle(fan_in())
    assert lm.load == (0.0, 2.0, 2.0, 1.0, 1.0)
    assert lm.edge_share[(3, 1)] == 0.5
    assert lm.base_child_loads == {1: 2.0, 2: 2.0}
    assert lm.theta() == 1.0


def test_uneven_split():
    # 1 -> {3}, 2 -> {}, 3 has parents {1, 2}, 4 has parent {1}: loads 5/2 and 3/2
    parents = [[], [0], [0], [1, 2], [1]]
    lm = compute_load_oracle(SpanningDag.from_parents(parents, [0, 1, 1, 2, 2], DagKind.SPD))
    assert lm.base_child_loads == {1: 2.5, 2: 1.5}


@pytest.mark.parametrize("loads,theta", [([3, 1], 0.8), ([2, 2], 1.0), ([5], 1.0),
                                         ([4, 0], 0.5), ([1, 1, 1, 1], 1.0)])
def test_balance_examples(loads, theta):
    assert balance_factor(loads) == pytest.approx(theta, abs=1e-15)


def test_balance_needs_children():
    with pytest.raises(EmptyChildren):
        balance_factor([])


positive = st.lists(st.floats(0.01, 1e3), min_size=2, max_size=12)


@given(positive, st.floats(0.01, 1e3))
def test_balance_scale_invariant(loads, c):
    assert balance_factor([c * x for x in loads]) == pytest.approx(balance_factor(loads), rel=1e-9)


@given(positive)
def test_balance_bounds(loads):
    t = balance_factor(loads)
    assert 1 / len(loads) - 1e-12 <= t <= 1 + 1e-12


@given(positive, st.data())
def test_equalising_raises_balance(loads, data):
    i = data.draw(st.integers(0, len(loads) - 1))
    j = data.draw(st.integers(0, len(loads) - 1))
    if loads[i] <= loads[j]:
        return
    frac = data.draw(st.floats(0.0, 1.0))
    moved = frac * (loads[i] - loads[j]) / 2
    after = list(loads)
    after[i] -= moved
    after[j] += moved
    assert balance_factor(after) >= balance_factor(loads) - 1e-12


def test_oracle_matches_exact_fractions(random_graphs):
    for g in random_graphs:
        spd = build_spd(g)
        lm = compute_load_oracle(spd)
        exact = exact_loads(spd)
        assert all(abs(a - float(b)) < 1e-12 for a, b in zip(lm.load, exact))
        assert sum(lm.base_child_loads.values()) == pytest.approx(g.n, abs=1e-9)


@pytest.mark.parametrize("seed", range(4))
def test_distributed_matches_oracle(seed):
    for g in small_instances(5, seed0=100 + seed):
        spd = build_spd(g)
        got = run_load_calc(spd, g, seed=seed)
        want = compute_load_oracle(spd)
        assert all(abs(a - b) <= 1e-9 for a, b in zip(got.load, want.load))
        assert got.base_child_loads.keys() == want.base_child_loads.keys()
        for key, share in want.edge_share.items():
            assert got.edge_share[key] == pytest.approx(share, abs=1e-9)


def test_single_node():
    g = ConnectivityGraph.from_positions([(0, 0), (1, 0)], 2.0)
    lm = run_load_calc(build_spd(g), g)
    assert lm.load == (0.0, 1.0) and lm.theta() == 1.0
