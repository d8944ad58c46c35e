import itertools
import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import connected_graphs, diamond, path_graph, star
from lifetree.lifetime import (FullyAggregated, PartiallyAggregated, RoutingTree, Unaggregated,
                               tree_lifetime)
from lifetree.oracle import (BudgetExceeded, SetCoverInstance, brute_force_optimal,
                             count_spanning_trees, emin_bound, gadget_layout, kirchhoff_count,
                             set_cover_gadget, spanning_trees)
from lifetree.topology import NetworkGraph


def nx_optima(g: NetworkGraph, model):
    """All optimal parent vectors, found through networkx's spanning-tree iterator."""
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(g.edges)
    scored = []
    for tr in nx.SpanningTreeIterator(h):
        t = RoutingTree.from_edges(g.n, tr.edges(), g.root)
        scored.append((tree_lifetime(t, g, model), t.parent))
    best = max(s for s, _ in scored)
    return best, [p for s, p in scored if s == best]


def test_diamond_optimum_is_one_half():
    t, T = brute_force_optimal(diamond(), Unaggregated())
    assert T == 0.5
    assert t.parent == (None, 0, 0, 1)


def test_tree_shaped_graph_is_its_own_optimum():
    g = path_graph([4.0, 4.0, 4.0])
    t, T = brute_force_optimal(g, Unaggregated())
    assert t.parent == (None, 0, 1, 2)
    assert T == 4.0 / 3


@given(connected_graphs(min_n=2, max_n=7, integer_energy=True),
       st.sampled_from([Unaggregated(), FullyAggregated(0.5), PartiallyAggregated(2)]))
def test_optimum_and_tie_break_match_networkx(g, model):
    t, T = brute_force_optimal(g, model)
    best, optima = nx_optima(g, model)
    assert T == best
    assert t.parent == min(optima, key=lambda p: tuple(-1 if x is None else x for x in p))


@given(connected_graphs(min_n=1, max_n=8))
def test_enumeration_count_matches_matrix_tree(g):
    assert count_spanning_trees(g) == kirchhoff_count(g)
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(g.edges)
    if g.n > 1:
        assert count_spanning_trees(g) == round(nx.number_of_spanning_trees(h))


def test_enumeration_is_lexicographic():
    g = NetworkGraph.from_edges([math.inf] * 4, [(u, v) for u in range(4) for v in range(u + 1, 4)])
    vecs = [tuple(-1 if x is None else x for x in p) for p in spanning_trees(g)]
    assert vecs == sorted(vecs)
    assert len(vecs) == 16


def test_size_and_budget_guards():
    g = NetworkGraph.from_edges([math.inf] + [1.0] * 10, [(u, v) for u in range(11) for v in range(u + 1, 11)])
    with pytest.raises(BudgetExceeded):
        brute_force_optimal(g, Unaggregated())
    small = NetworkGraph.from_edges([math.inf] + [1.0] * 5, [(u, v) for u in range(6) for v in range(u + 1, 6)])
    with pytest.raises(BudgetExceeded):
        brute_force_optimal(small, Unaggregated(), budget=100)
    with pytest.raises(ValueError):
        brute_force_optimal(NetworkGraph.from_edges([math.inf, 1.0, 1.0], [(0, 1)]), Unaggregated())


def test_complete_graph_full_aggregation():
    g = NetworkGraph.from_edges([math.inf] + [1000.0] * 3, [(u, v) for u in range(4) for v in range(u + 1, 4)])
    assert brute_force_optimal(g, FullyAggregated(0.5))[1] == 1000.0


def test_emin_bound_examples():
    assert emin_bound(star([400.0, 1600.0])) == 400.0
    assert emin_bound(star([1000.0] * 5)) == 1000.0
    assert emin_bound(star([7.5])) == 7.5


@given(connected_graphs(min_n=2, max_n=7))
def test_optimum_below_emin(g):
    for m in (Unaggregated(), FullyAggregated(0.5)):
        assert brute_force_optimal(g, m)[1] <= emin_bound(g)


def test_set_cover_validation():
    with pytest.raises(ValueError):
        SetCoverInstance.of([{1}, {2}], 3)
    with pytest.raises(ValueError):
        SetCoverInstance.of([{1}, {3}], 1, n_elements=3)
    with pytest.raises(ValueError):
        SetCoverInstance.of([{1}, {5}], 1, n_elements=3)


def test_gadget_with_cover():
    inst = SetCoverInstance.of([{1, 2}, {2, 3}], 2)
    g = set_cover_gadget(inst)
    lay = gadget_layout(inst)
    assert g.n == 10
    assert {g.energy[lay.selector], g.energy[lay.collector]} == {3.0, 6.0}
    assert [g.energy[i] for i in lay.set_nodes] == [3.0, 3.0]
    assert [g.energy[i] for i in lay.guards] == [2.0, 2.0]
    assert [g.energy[i] for i in lay.element_nodes] == [1.0, 1.0, 1.0]
    assert brute_force_optimal(g, Unaggregated(), max_nodes=None)[1] == 1.0


def test_gadget_without_cover():
    inst = SetCoverInstance.of([{1}, {2}], 1)
    assert not inst.has_cover()
    g = set_cover_gadget(inst)
    assert brute_force_optimal(g, Unaggregated(), max_nodes=None)[1] < 1.0


def test_gadget_shape():
    inst = SetCoverInstance.of([{1, 2, 3}, {2, 4}, {4}], 2)
    g = set_cover_gadget(inst)
    lay = gadget_layout(inst)
    k, n = 3, 4
    assert g.n - 1 == 2 + k + k + n
    adj = g.adjacency
    assert set(adj[lay.root]) == {lay.selector, lay.collector}
    for i, s in enumerate(inst.sets):
        assert set(adj[lay.guards[i]]) == {lay.selector, lay.set_nodes[i]}
        assert lay.collector in adj[lay.set_nodes[i]]
    for x in range(1, n + 1):
        containing = {lay.set_nodes[i] for i, s in enumerate(inst.sets) if x in s}
        assert set(adj[lay.element_nodes[x - 1]]) == containing
        assert len(adj[lay.element_nodes[x - 1]]) == len(containing)


def test_has_cover_matches_subset_search():
    rng = np.random.default_rng(3)
    for _ in range(50):
        n, k = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        sets = [set(int(x) for x in rng.choice(np.arange(1, n + 1), size=int(rng.integers(1, n + 1)), replace=False))
                for _ in range(k)]
        missing = set(range(1, n + 1)) - set().union(*sets)
        if missing:
            sets[0] |= missing
        p = int(rng.integers(1, k + 1))
        inst = SetCoverInstance.of(sets, p, n_elements=n)
        ref = any(set().union(*c) == set(range(1, n + 1))
                  for r in range(1, p + 1) for c in itertools.combinations(sets, r))
        assert inst.has_cover() == ref
