import math

import numpy as np
import pytest
from hypothesis import settings, strategies as st

from lifetree.lifetime import RoutingTree
from lifetree.topology import NetworkGraph

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def diamond(e: float = 1.0) -> NetworkGraph:
    """Root 0 linked to 1 and 2, both linked to 3."""
    return NetworkGraph.from_edges([math.inf, e, e, e], [(0, 1), (0, 2), (1, 3), (2, 3)])


def star(energies) -> NetworkGraph:
    return NetworkGraph.from_edges([math.inf, *energies], [(0, i) for i in range(1, len(energies) + 1)])


def path_graph(energies) -> NetworkGraph:
    n = len(energies) + 1
    return NetworkGraph.from_edges([math.inf, *energies], [(i, i + 1) for i in range(n - 1)])


def random_connected(rng: np.random.Generator, n: int, p: float = 0.4,
                     energies=None, integer_energy: bool = False) -> NetworkGraph:
    """Random spanning tree on ``n`` nodes plus each other pair with probability ``p``."""
    perm = [0] + list(rng.permutation(np.arange(1, n)))
    edges = set()
    for k in range(1, n):
        a, b = perm[k], perm[int(rng.integers(k))]
        edges.add((min(a, b), max(a, b)))
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < p:
                edges.add((u, v))
    if energies is None:
        if integer_energy:
            energies = [float(x) for x in rng.integers(1, 10, size=n)]
        else:
            energies = list(rng.uniform(1.0, 10.0, size=n))
    energies = [math.inf] + [float(e) for e in energies[1:]]
    return NetworkGraph.from_edges(energies, sorted(edges), 0)


def random_spanning_tree(rng: np.random.Generator, g: NetworkGraph) -> RoutingTree:
    """Random spanning tree of ``g`` by randomized BFS-free growth."""
    parent = [None] * g.n
    in_tree = {g.root}
    frontier = [(g.root, v) for v in g.adjacency[g.root]]
    while len(in_tree) < g.n:
        k = int(rng.integers(len(frontier)))
        u, v = frontier.pop(k)
        if v in in_tree:
            continue
        parent[v] = u
        in_tree.add(v)
        frontier.extend((v, w) for w in g.adjacency[v] if w not in in_tree)
    return RoutingTree(tuple(parent), g.root)


@st.composite
def connected_graphs(draw, min_n: int = 2, max_n: int = 7, integer_energy: bool = True):
    n = draw(st.integers(min_n, max_n))
    edges = set()
    for v in range(1, n):
        u = draw(st.integers(0, v - 1))
        edges.add((u, v))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n) if (u, v) not in edges]
    extra = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs))) if pairs else []
    edges.update(extra)
    if integer_energy:
        e = draw(st.lists(st.integers(1, 12), min_size=n - 1, max_size=n - 1))
    else:
        e = draw(st.lists(st.floats(0.5, 50.0), min_size=n - 1, max_size=n - 1))
    return NetworkGraph.from_edges([math.inf, *map(float, e)], sorted(edges), 0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
