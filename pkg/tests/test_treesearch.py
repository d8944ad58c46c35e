import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import connected_graphs, diamond, random_connected, random_spanning_tree
from lifetree.lifetime import (FullyAggregated, InvalidTreeError, PartiallyAggregated,
                               RoutingTree, Unaggregated, flow_rate, outflows, rates,
                               tree_lifetime, validate_tree)
from lifetree.oracle import brute_force_optimal
from lifetree.topology import NetworkGraph, random_network
from lifetree.treesearch import (SearchTrace, ecrt, ecrt_local_opt, hop_levels, local_opt,
                                 min_hop_tree)

MODELS = [Unaggregated(), PartiallyAggregated(2), PartiallyAggregated(3, True, 0.5),
          Unaggregated(True, 0.5)]


def node_lives(t: RoutingTree, g: NetworkGraph, model) -> list[float]:
    r = rates(t, model)
    return sorted(g.energy[i] / r[i] for i in range(g.n) if i != g.root)


def single_switches(t: RoutingTree, g: NetworkGraph):
    """Every tree reachable by re-parenting one node (independent of the solver)."""
    for v in range(g.n):
        if v == g.root:
            continue
        for u in g.adjacency[v]:
            if u == t.parent[v]:
                continue
            parent = list(t.parent)
            parent[v] = u
            cand = RoutingTree(tuple(parent), g.root)
            if not validate_tree(cand, g):
                yield cand


def naive_ecrt(g: NetworkGraph, model) -> RoutingTree:
    """Greedy growth evaluating every attachment by recomputing the partial tree."""
    parent = [None] * g.n
    in_tree = {g.root}

    def partial_life(par):
        members = [i for i in range(g.n) if i == g.root or par[i] is not None]
        ch = {i: [] for i in members}
        for i in members:
            if par[i] is not None:
                ch[par[i]].append(i)
        cap = getattr(model, "ell", math.inf)
        f = {}

        def flow(i):
            f[i] = min(cap, 1 + sum(flow(c) for c in ch[i]))
            return f[i]
        for c in ch[g.root]:
            flow(c)
        return min((g.energy[i] / flow_rate(model, f[i]) for i in f), default=math.inf)

    while len(in_tree) < g.n:
        best = None
        for v in range(g.n):
            if v in in_tree:
                continue
            for u in g.adjacency[v]:
                if u not in in_tree:
                    continue
                par = list(parent)
                par[v] = u
                key = (partial_life(par), g.energy[v], -v, -u)
                if best is None or key > best[0]:
                    best = (key, v, u)
        _, v, u = best
        parent[v] = u
        in_tree.add(v)
    return RoutingTree(tuple(parent), g.root)


def test_min_hop_levels_match_bfs(rng):
    for _ in range(20):
        g = random_connected(rng, 15, p=0.2)
        dist = nx.single_source_shortest_path_length(nx.Graph(list(g.edges)), g.root)
        assert hop_levels(g) == [dist[i] for i in range(g.n)]
        t = min_hop_tree(g)
        assert validate_tree(t, g) == []
        for v in range(1, g.n):
            closer = [u for u in g.adjacency[v] if dist[u] == dist[v] - 1]
            assert t.parent[v] == min(closer)


def test_min_hop_random_tie_break_is_seeded():
    g = random_network(80, 100.0, 3.0, seed=2)
    a = min_hop_tree(g, "random:5")
    assert a == min_hop_tree(g, "random:5")
    assert a != min_hop_tree(g, "lowest")
    assert validate_tree(a, g) == []
    with pytest.raises(ValueError):
        min_hop_tree(g, "fastest")


def test_min_hop_rejects_disconnected():
    with pytest.raises(ValueError):
        min_hop_tree(NetworkGraph.from_edges([math.inf, 1, 1], [(0, 1)]))


def test_ecrt_on_diamond():
    g = diamond()
    t = ecrt(g, Unaggregated())
    assert tree_lifetime(t, g, Unaggregated()) == 0.5


def test_ecrt_rejects_full_query():
    with pytest.raises(ValueError):
        ecrt(diamond(), FullyAggregated(0.5))
    with pytest.raises(ValueError):
        local_opt(diamond(), RoutingTree((None, 0, 0, 1)), FullyAggregated(0.5))


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.label + ("+rx" if m.include_rx else ""))
def test_ecrt_matches_naive_greedy(rng, model):
    for _ in range(15):
        g = random_connected(rng, 12, p=0.3)
        assert ecrt(g, model) == naive_ecrt(g, model)


def test_ecrt_matches_naive_with_ties(rng):
    for _ in range(15):
        g = random_connected(rng, 10, p=0.4, energies=[1.0] * 10)
        assert ecrt(g, Unaggregated()) == naive_ecrt(g, Unaggregated())


def test_ecrt_trace_records_each_attachment():
    g = random_network(40, 100.0, 2.5, seed=3)
    tr = SearchTrace()
    t = ecrt(g, Unaggregated(), tr)
    assert tr.iterations == g.n - 1
    assert sorted(s[1] for s in tr.steps) == list(range(1, g.n))
    vals = [s[3] for s in tr.steps]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    assert vals[-1] == pytest.approx(tree_lifetime(t, g, Unaggregated()))


@given(connected_graphs(min_n=2, max_n=8), st.integers(0, 2 ** 31 - 1),
       st.sampled_from(MODELS))
def test_local_opt_is_single_switch_optimal(g, seed, model):
    t0 = random_spanning_tree(np.random.default_rng(seed), g)
    t = local_opt(g, t0, model)
    assert validate_tree(t, g) == []
    T = tree_lifetime(t, g, model)
    assert T >= tree_lifetime(t0, g, model) * (1 - 1e-12)
    lives = node_lives(t, g, model)
    for cand in single_switches(t, g):
        assert tree_lifetime(cand, g, model) <= T * (1 + 1e-12)
        # no neighbor is better in the sorted-lifetime order either
        other = node_lives(cand, g, model)
        for a, b in zip(other, lives):
            if a > b * (1 + 1e-9):
                raise AssertionError(f"switch to {cand.parent} improves {lives} -> {other}")
            if a < b * (1 - 1e-9):
                break


@given(connected_graphs(min_n=2, max_n=8), st.integers(0, 2 ** 31 - 1))
def test_strict_local_opt_is_single_switch_optimal(g, seed):
    model = Unaggregated()
    t0 = random_spanning_tree(np.random.default_rng(seed), g)
    tr = SearchTrace()
    t = local_opt(g, t0, model, tr, acceptance="strict")
    T = tree_lifetime(t, g, model)
    for cand in single_switches(t, g):
        assert tree_lifetime(cand, g, model) <= T * (1 + 1e-12)
    vals = [tree_lifetime(t0, g, model)] + [s[3] for s in tr.steps]
    assert all(b > a for a, b in zip(vals, vals[1:]))


@given(connected_graphs(min_n=2, max_n=7), st.integers(0, 2 ** 31 - 1))
def test_heuristics_never_beat_the_optimum(g, seed):
    model = Unaggregated()
    _, t_opt = brute_force_optimal(g, model)
    t0 = random_spanning_tree(np.random.default_rng(seed), g)
    for t in (min_hop_tree(g), ecrt(g, model), local_opt(g, t0, model), ecrt_local_opt(g, model)):
        assert tree_lifetime(t, g, model) <= t_opt * (1 + 1e-12)


def test_local_opt_trace_never_decreases():
    g = random_network(120, 100.0, 2.5, seed=11)
    tr = SearchTrace()
    t0 = min_hop_tree(g)
    t = local_opt(g, t0, Unaggregated(), tr)
    vals = [tree_lifetime(t0, g, Unaggregated())] + [s[3] for s in tr.steps]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert vals[-1] == tree_lifetime(t, g, Unaggregated())
    assert tr.steps and tr.iterations >= 2


def test_local_opt_from_bad_diamond_tree():
    g = diamond()
    t = local_opt(g, RoutingTree((None, 0, 3, 1)), Unaggregated())
    assert tree_lifetime(t, g, Unaggregated()) == 0.5


def test_local_opt_sweep_cap():
    g = diamond()
    with pytest.raises(RuntimeError):
        local_opt(g, RoutingTree((None, 0, 3, 1)), Unaggregated(), max_sweeps=1)


def test_local_opt_rejects_invalid_start():
    with pytest.raises(InvalidTreeError):
        local_opt(diamond(), RoutingTree((None, 0, 0, 0)), Unaggregated())
    with pytest.raises(ValueError):
        local_opt(diamond(), RoutingTree((None, 0, 0, 1)), Unaggregated(), acceptance="greedy")


def test_cap_one_leaves_every_tree_optimal():
    g = random_network(60, 100.0, 2.5, seed=4)
    t0 = min_hop_tree(g)
    tr = SearchTrace()
    t = local_opt(g, t0, PartiallyAggregated(1), tr)
    assert t == t0 and tr.steps == []
    assert outflows(t, PartiallyAggregated(1))[1:] == [1] * (g.n - 1)


def test_local_opt_improves_min_hop_on_random_networks():
    for seed in range(3):
        g = random_network(150, 100.0, 2.5, seed=seed)
        assert min(hop_levels(g)) >= 0
        m = Unaggregated()
        assert tree_lifetime(local_opt(g, min_hop_tree(g), m), g, m) > tree_lifetime(min_hop_tree(g), g, m)
