"""Fully aggregated queries: degree-bounded spanning trees.

With receive cost ``c_r`` a node of tree degree ``d`` spends
``1 + c_r (d - 1)`` per epoch, so a target lifetime ``T`` caps each
node's degree at ``B_i``. Hanging ``N - B_i`` pendant auxiliary nodes on
node ``i`` turns the non-uniform caps into a single cap ``N``, which the
Fürer-Raghavachari local improvement procedure meets to within one.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

from .lifetime import RoutingTree
from .topology import NetworkGraph, is_connected
from .treesearch import min_hop_tree


class InfeasibleError(ValueError):
    """Target lifetime exceeds what any tree can reach."""


def degree_bound(e: float, T: float, c_r: float) -> int:
    """Largest tree degree node of energy ``e`` can afford at lifetime ``T``.

    Returns 0 when even a leaf cannot last ``T`` (``T > e``).
    """
    if c_r == 0:
        raise ValueError("c_r = 0: every spanning tree is optimal, no degree bound applies")
    if not 0 < c_r < 1:
        raise ValueError(f"c_r must be in (0, 1), got {c_r}")
    if not T > 0:
        raise ValueError(f"T must be positive, got {T}")
    x = 1.0 + (e / T - 1.0) / c_r
    # candidate lifetimes are e / (1 + c_r m) rounded to float; snap back onto m + 1
    b = math.floor(x + 1e-9 * max(1.0, abs(x)))
    return max(b, 0)


@dataclass(frozen=True)
class DegreeBounds:
    bounds: tuple[int, ...]
    T: float


def degree_bounds(g: NetworkGraph, T: float, c_r: float) -> DegreeBounds:
    n = g.n
    return DegreeBounds(
        tuple(n if i == g.root else degree_bound(g.energy[i], T, c_r) for i in range(n)), T)


@dataclass(frozen=True)
class AugmentedGraph:
    """Base graph plus ``max(0, N - B_i)`` degree-one auxiliaries on each node.

    Auxiliary ids start at ``base.n`` and run in host order.
    """

    base: NetworkGraph
    bounds: DegreeBounds
    aux_of: tuple[tuple[int, ...], ...]

    @property
    def n_total(self) -> int:
        return self.base.n + sum(len(a) for a in self.aux_of)

    def aux_edges(self) -> list[tuple[int, int]]:
        return [(host, a) for host, auxs in enumerate(self.aux_of) for a in auxs]

    def host(self, aux: int) -> int:
        for h, auxs in enumerate(self.aux_of):
            if aux in auxs:
                return h
        raise KeyError(aux)

    def as_network(self) -> NetworkGraph:
        """Materialize as a plain graph (auxiliaries get unit energy)."""
        energy = list(self.base.energy) + [1.0] * (self.n_total - self.base.n)
        return NetworkGraph.from_edges(energy, list(self.base.edges) + self.aux_edges(),
                                       self.base.root)


def augment_graph(g: NetworkGraph, T: float, c_r: float) -> AugmentedGraph:
    if T > g.e_min():
        raise InfeasibleError(f"T = {T} exceeds e_min = {g.e_min()}; no tree can last that long")
    db = degree_bounds(g, T, c_r)
    n = g.n
    aux_of = []
    next_id = n
    for b in db.bounds:
        k = max(0, n - b)
        aux_of.append(tuple(range(next_id, next_id + k)))
        next_id += k
    return AugmentedGraph(g, db, tuple(aux_of))


def strip_auxiliaries(edges, aug: AugmentedGraph) -> list[tuple[int, int]]:
    n = aug.base.n
    return sorted(e for e in edges if e[0] < n and e[1] < n)


# -- Fürer-Raghavachari -----------------------------------------------------

class _Stuck(Exception):
    pass


class _DSU:
    def __init__(self, n):
        self.p = list(range(n))

    def find(self, x):
        p = self.p
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a, b):
        a, b = self.find(a), self.find(b)
        if a != b:
            self.p[max(a, b)] = min(a, b)


def _bfs_tree_adj(adj, root):
    n = len(adj)
    tadj = [set() for _ in range(n)]
    seen = [False] * n
    seen[root] = True
    order = [root]
    for u in order:
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                tadj[u].add(v)
                tadj[v].add(u)
                order.append(v)
    if len(order) != n:
        raise ValueError("graph is disconnected")
    return tadj


def _root_tree(tadj, root):
    n = len(tadj)
    par = [-1] * n
    dep = [0] * n
    order = [root]
    par[root] = root
    for u in order:
        for v in tadj[u]:
            if par[v] == -1:
                par[v] = u
                dep[v] = dep[u] + 1
                order.append(v)
    return par, dep


def _static_path(u, v, par, dep):
    left, right = [u], [v]
    while dep[u] > dep[v]:
        u = par[u]
        left.append(u)
    while dep[v] > dep[u]:
        v = par[v]
        right.append(v)
    while u != v:
        u, v = par[u], par[v]
        left.append(u)
        right.append(v)
    right.pop()
    return left + right[::-1]


def _live_path(tadj, a, b):
    prev = {a: a}
    queue = [a]
    for u in queue:
        if u == b:
            break
        for v in tadj[u]:
            if v not in prev:
                prev[v] = u
                queue.append(v)
    if b not in prev:
        raise _Stuck()
    path = [b]
    while path[-1] != a:
        path.append(prev[path[-1]])
    return path[::-1]


def _fr_core(adj, offset, root, stats=None):
    n = len(adj)
    tadj = _bfs_tree_adj(adj, root)
    edges = sorted((u, v) for u in range(n) for v in adj[u] if u < v)
    improvements = 0
    while True:
        deg = [len(tadj[v]) + offset[v] for v in range(n)]
        k = max(deg)
        bad = [d >= k - 1 for d in deg]
        par, dep = _root_tree(tadj, root)
        dsu = _DSU(n)
        for u in range(n):
            if not bad[u]:
                for v in tadj[u]:
                    if v > u and not bad[v]:
                        dsu.union(u, v)
        heap = [(u, v) for u, v in edges if not bad[u] and not bad[v] and v not in tadj[u]]
        witness: dict[int, tuple[int, int]] = {}
        target = None
        while heap and target is None:
            u, v = heapq.heappop(heap)
            if dsu.find(u) == dsu.find(v):
                continue
            path = _static_path(u, v, par, dep)
            fresh = []
            for x in path:
                if bad[x]:
                    bad[x] = False
                    witness[x] = (u, v)
                    fresh.append(x)
                dsu.union(x, u)
            for x in fresh:
                if deg[x] == k:
                    target = x
                    break
                for y in adj[x]:
                    if not bad[y] and y not in tadj[x]:
                        heapq.heappush(heap, (min(x, y), max(x, y)))
        if target is None:
            break
        snapshot = [set(s) for s in tadj]
        try:
            _improve(target, witness, tadj, deg, k, set())
        except _Stuck:
            # cannot happen if the witness structure is intact; keep the last good tree
            tadj = snapshot
            if stats is not None:
                stats["stuck"] = stats.get("stuck", 0) + 1
            break
        improvements += 1
    if stats is not None:
        stats["improvements"] = improvements
    return tadj


def _improve(x, witness, tadj, deg, k, done):
    if x in done or x not in witness:
        raise _Stuck()
    done.add(x)
    a, b = witness[x]
    for y in (a, b):
        if deg[y] >= k - 1:
            _improve(y, witness, tadj, deg, k, done)
    path = _live_path(tadj, a, b)
    try:
        i = path.index(x)
    except ValueError:
        raise _Stuck() from None
    if i == 0 or i == len(path) - 1:
        raise _Stuck()
    y = min(path[i - 1], path[i + 1])
    tadj[x].discard(y)
    tadj[y].discard(x)
    tadj[a].add(b)
    tadj[b].add(a)
    deg[x] -= 1
    deg[y] -= 1
    deg[a] += 1
    deg[b] += 1


def fr_mdst(g: NetworkGraph | AugmentedGraph, stats: dict | None = None) -> frozenset[tuple[int, int]]:
    """Spanning tree whose maximum degree is at most the optimum plus one.

    Starts from the BFS tree of the root and repeatedly applies the
    Fürer-Raghavachari improvement: vertices of degree ``k`` and ``k-1``
    are marked bad, non-tree edges between different good components
    mark the bad vertices on their tree cycle good, and once a degree-``k``
    vertex turns good a chain of edge swaps lowers its degree without
    creating a new degree-``k`` vertex. Ties go to the lexicographically
    smallest edge.

    For an :class:`AugmentedGraph` the pendant auxiliaries are handled as
    degree offsets (they are bridges, hence in every spanning tree) and
    the returned edge set includes them.
    """
    if isinstance(g, AugmentedGraph):
        base, offset = g.base, [len(a) for a in g.aux_of]
    else:
        base, offset = g, [0] * g.n
    if not is_connected(base):
        raise ValueError("graph is disconnected")
    tadj = _fr_core(base.adjacency, offset, base.root, stats)
    edges = {(u, v) for u in range(base.n) for v in tadj[u] if u < v}
    if isinstance(g, AugmentedGraph):
        edges.update(g.aux_edges())
    return frozenset(edges)


def max_degree(n: int, edges) -> int:
    deg = [0] * n
    for u, v in edges:
        deg[u] += 1
        deg[v] += 1
    return max(deg)


# -- lifetime search --------------------------------------------------------

def candidate_lifetimes(g: NetworkGraph, c_r: float) -> list[float]:
    """Every value ``e_i / (1 + c_r m)`` an optimal tree's lifetime can take.

    ``m`` ranges over ``0..N-2`` (extra neighbors beyond the parent).
    Duplicates are removed exactly before conversion to float.
    """
    n, emin = g.n, g.e_min()
    c = Fraction(c_r)
    emin_q = Fraction(emin)
    vals = set()
    for i in range(n):
        if i == g.root:
            continue
        e = Fraction(g.energy[i])
        for m in range(n - 1):
            v = e / (1 + c * m)
            if v <= emin_q:
                vals.add(v)
    return [float(v) for v in sorted(vals)]


def full_lifetime_from_degrees(g: NetworkGraph, deg, c_r: float) -> float:
    return min((g.energy[i] / (1.0 + c_r * (deg[i] - 1)) for i in range(g.n) if i != g.root),
               default=math.inf)


class Probe(NamedTuple):
    T: float
    feasible: bool
    lifetime: float


class AggregatedResult(NamedTuple):
    tree: RoutingTree
    lifetime: float
    probes: list[Probe]


def _probe(g: NetworkGraph, T: float, c_r: float):
    aug = augment_graph(g, T, c_r)
    edges = strip_auxiliaries(fr_mdst(aug), aug)
    deg = [0] * g.n
    for u, v in edges:
        deg[u] += 1
        deg[v] += 1
    b = aug.bounds.bounds
    ok = all(deg[i] <= b[i] + 1 for i in range(g.n) if i != g.root)
    return ok, edges, full_lifetime_from_degrees(g, deg, c_r)


def aggregated_tree(g: NetworkGraph, c_r: float, scan_all: bool = False) -> AggregatedResult:
    """Search candidate lifetimes for the best degree-bounded tree.

    Each probe builds the augmented graph for a target ``T``, runs
    :func:`fr_mdst`, strips the auxiliaries and calls the probe feasible
    when every sensor's degree is within ``B_i(T) + 1``. The search is a
    bisection over the sorted candidates (``scan_all`` probes them all);
    the tree with the best actual lifetime over all probes is returned.
    """
    if not is_connected(g):
        raise ValueError("graph is disconnected")
    if c_r == 0:
        t = min_hop_tree(g)
        return AggregatedResult(t, g.e_min(), [])
    if not 0 < c_r < 1:
        raise ValueError(f"c_r must be in [0, 1), got {c_r}")
    if g.n == 1:
        return AggregatedResult(RoutingTree((None,), g.root), math.inf, [])
    cands = candidate_lifetimes(g, c_r)
    probes: list[Probe] = []
    best: tuple[float, list] | None = None

    def run(idx):
        nonlocal best
        T = cands[idx]
        ok, edges, life = _probe(g, T, c_r)
        probes.append(Probe(T, ok, life))
        if best is None or life > best[0]:
            best = (life, edges)
        return ok

    if scan_all:
        for i in range(len(cands)):
            run(i)
    else:
        # the smallest candidate allows degree N-1 everywhere, so it is always
        # feasible; one past the largest is treated as infeasible
        lo, hi = 0, len(cands)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if run(mid):
                lo = mid
            else:
                hi = mid
        if not any(p.T == cands[lo] for p in probes):
            run(lo)
    life, edges = best
    return AggregatedResult(RoutingTree.from_edges(g.n, edges, g.root), life, probes)
