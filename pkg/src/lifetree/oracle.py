"""Exact answers for small instances.

``brute_force_optimal`` enumerates every spanning tree by assigning
parents node by node (ascending ids, ascending parent ids) and pruning
as soon as a parent chain closes on itself. It is the reference the
heuristics and bounds are tested against, so it refuses rather than
approximates when an instance is too large.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .lifetime import FullyAggregated, QueryModel, RoutingTree, flow_cap, flow_rate
from .topology import NetworkGraph, is_connected

MAX_NODES = 10
TREE_BUDGET = 10 ** 7


class BudgetExceeded(RuntimeError):
    pass


def spanning_trees(g: NetworkGraph, budget: int = TREE_BUDGET) -> Iterator[tuple[int | None, ...]]:
    """Yield every spanning tree of ``g`` as a parent vector, in lexicographic order."""
    n, root, adj = g.n, g.root, g.adjacency
    order = [v for v in range(n) if v != root]
    parent: list[int | None] = [None] * n
    count = 0

    def closes_cycle(v, p):
        x = p
        while x is not None:
            if x == v:
                return True
            x = parent[x]
        return False

    def rec(k):
        nonlocal count
        if k == len(order):
            count += 1
            if count > budget:
                raise BudgetExceeded(f"more than {budget} spanning trees; refusing to enumerate")
            yield tuple(parent)
            return
        v = order[k]
        for p in adj[v]:
            if closes_cycle(v, p):
                continue
            parent[v] = p
            yield from rec(k + 1)
            parent[v] = None

    yield from rec(0)


def count_spanning_trees(g: NetworkGraph, budget: int = TREE_BUDGET) -> int:
    return sum(1 for _ in spanning_trees(g, budget))


def kirchhoff_count(g: NetworkGraph) -> int:
    """Spanning-tree number from the Laplacian (matrix-tree theorem)."""
    n = g.n
    lap = np.zeros((n, n))
    for u, v in g.edges:
        lap[u, v] -= 1
        lap[v, u] -= 1
        lap[u, u] += 1
        lap[v, v] += 1
    keep = [i for i in range(n) if i != g.root]
    if not keep:
        return 1
    return int(round(np.linalg.det(lap[np.ix_(keep, keep)])))


def _evaluator(g: NetworkGraph, model: QueryModel):
    n, root, energy = g.n, g.root, g.energy
    if isinstance(model, FullyAggregated):
        c = model.c_r

        def life(parent):
            deg = [0] * n
            for i, p in enumerate(parent):
                if p is not None:
                    deg[i] += 1
                    deg[p] += 1
            return min((energy[i] / (1 + c * (deg[i] - 1)) for i in range(n) if i != root),
                       default=math.inf)
        return life

    cap = flow_cap(model)

    def life(parent):
        depth = [0] * n
        for i in range(n):
            d, x = 0, i
            while x != root:
                x = parent[x]
                d += 1
            depth[i] = d
        raw = [1] * n
        f = [0] * n
        for i in sorted(range(n), key=lambda i: -depth[i]):
            if i == root:
                continue
            f[i] = min(cap, raw[i])
            raw[parent[i]] += f[i]
        return min((energy[i] / flow_rate(model, f[i]) for i in range(n) if i != root),
                   default=math.inf)
    return life


def brute_force_optimal(g: NetworkGraph, model: QueryModel, max_nodes: int | None = MAX_NODES,
                        budget: int = TREE_BUDGET) -> tuple[RoutingTree, float]:
    """Best spanning tree by exhaustive search.

    Ties go to the lexicographically smallest parent vector. Raises
    :class:`BudgetExceeded` above ``max_nodes`` nodes or ``budget`` trees.
    """
    if max_nodes is not None and g.n > max_nodes:
        raise BudgetExceeded(f"{g.n} nodes exceeds the exhaustive-search limit of {max_nodes}")
    if not is_connected(g):
        raise ValueError("graph is disconnected")
    life = _evaluator(g, model)
    best, best_t = None, -math.inf
    for parent in spanning_trees(g, budget):
        t = life(parent)
        if t > best_t:
            best, best_t = parent, t
    return RoutingTree(best, g.root), best_t


def min_max_degree(g: NetworkGraph, budget: int = TREE_BUDGET) -> int:
    """Exact minimum over spanning trees of the maximum degree."""
    n = g.n
    best = n
    for parent in spanning_trees(g, budget):
        deg = [0] * n
        for i, p in enumerate(parent):
            if p is not None:
                deg[i] += 1
                deg[p] += 1
        best = min(best, max(deg))
    return best


def emin_bound(g: NetworkGraph) -> float:
    """No tree outlives its weakest sensor, which spends at least 1 per epoch."""
    return g.e_min()


# -- Set-Cover gadget -------------------------------------------------------

@dataclass(frozen=True)
class SetCoverInstance:
    """Elements are ``1..n_elements``; pick ``p`` sets covering them all."""

    n_elements: int
    sets: tuple[frozenset[int], ...]
    p: int

    def __post_init__(self):
        k = len(self.sets)
        if not 1 <= self.p <= k:
            raise ValueError(f"need 1 <= p <= {k}, got p={self.p}")
        universe = set(range(1, self.n_elements + 1))
        covered = set().union(*self.sets) if self.sets else set()
        if covered - universe:
            raise ValueError(f"sets mention unknown elements {sorted(covered - universe)}")
        if universe - covered:
            raise ValueError(f"elements {sorted(universe - covered)} are in no set")

    @classmethod
    def of(cls, sets, p: int, n_elements: int | None = None) -> "SetCoverInstance":
        fs = tuple(frozenset(int(x) for x in s) for s in sets)
        if n_elements is None:
            n_elements = max((max(s) for s in fs if s), default=0)
        return cls(n_elements, fs, p)

    def has_cover(self) -> bool:
        universe = set(range(1, self.n_elements + 1))
        return any(set().union(*combo) >= universe
                   for combo in itertools.combinations(self.sets, self.p))


@dataclass(frozen=True)
class GadgetLayout:
    root: int
    selector: int       # energy 2k - p + 1, takes the sets left out of the cover
    collector: int      # energy p + n + 1, takes the cover and all elements
    guards: tuple[int, ...]
    set_nodes: tuple[int, ...]
    element_nodes: tuple[int, ...]


def gadget_layout(inst: SetCoverInstance) -> GadgetLayout:
    k, n = len(inst.sets), inst.n_elements
    guards = tuple(range(3, 3 + k))
    set_nodes = tuple(range(3 + k, 3 + 2 * k))
    elements = tuple(range(3 + 2 * k, 3 + 2 * k + n))
    return GadgetLayout(0, 1, 2, guards, set_nodes, elements)


def set_cover_gadget(inst: SetCoverInstance) -> NetworkGraph:
    """Routing instance with a lifetime-1 tree iff ``inst`` has a size-``p`` cover.

    Five rows: the root; a selector (energy ``2k - p + 1``) and a
    collector (energy ``p + n + 1``), both on the root; ``k`` guard nodes
    of energy 2 on the selector; one node per set with energy
    ``|S_i| + 1``, linked to its guard and to the collector; and ``n``
    unit-energy element nodes linked to the sets containing them.
    """
    k, n, p = len(inst.sets), inst.n_elements, inst.p
    lay = gadget_layout(inst)
    energy = [math.inf, 2 * k - p + 1, p + n + 1]
    energy += [2] * k
    energy += [len(s) + 1 for s in inst.sets]
    energy += [1] * n
    edges = [(lay.root, lay.selector), (lay.root, lay.collector)]
    for i in range(k):
        edges.append((lay.selector, lay.guards[i]))
        edges.append((lay.guards[i], lay.set_nodes[i]))
        edges.append((lay.collector, lay.set_nodes[i]))
        for x in sorted(inst.sets[i]):
            edges.append((lay.set_nodes[i], lay.element_nodes[x - 1]))
    return NetworkGraph.from_edges(energy, edges, lay.root)
