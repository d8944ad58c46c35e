"""Multipath upper bound on unaggregated tree lifetime.

Dropping integrality from the tree-routing program leaves a max-flow
question: can every sensor inject ``T`` units per epoch and get them to
the root when a sensor's total throughput is capped by its energy?
Sensors are split into an in/out pair joined by an arc of capacity
``e_i``; graph edges become uncapacitated arcs between the halves.

The largest feasible ``T`` is found by bisection on ``[0, e_min]``.
Each infeasible probe also yields a cut whose capacity ``a T + b`` must
cover ``(N - 1) T``, so ``b / (N - 1 - a)`` tightens the upper end
of the bracket; in practice this closes the bracket in a few probes.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import NamedTuple

from .topology import NetworkGraph, is_connected

FLOW_EPS = 1e-9


@dataclass(frozen=True)
class FlowNetwork:
    """Directed network with split sensors.

    Node 0 is the synthetic source, node 1 the (unsplit) root, and
    ``split[i] = (i_in, i_out)`` for every sensor ``i``.
    """

    n_nodes: int
    arcs: tuple[tuple[int, int, float], ...]
    source: int
    sink: int
    split: dict
    infinite: float

    def total_source_capacity(self) -> float:
        return sum(c for t, h, c in self.arcs if t == self.source)


def build_flow_network(g: NetworkGraph, T: float) -> FlowNetwork:
    if T < 0:
        raise ValueError("T must be non-negative")
    source, sink = 0, 1
    split = {}
    nxt = 2
    for i in range(g.n):
        if i != g.root:
            split[i] = (nxt, nxt + 1)
            nxt += 2
    big = sum(g.energy[i] for i in split) + 1.0

    def tail(i):
        return sink if i == g.root else split[i][1]

    def head(i):
        return sink if i == g.root else split[i][0]

    arcs = []
    for i, (i_in, i_out) in split.items():
        arcs.append((source, i_in, float(T)))
        arcs.append((i_in, i_out, float(g.energy[i])))
    for u, v in g.sorted_edges():
        # the root only receives
        if u != g.root:
            arcs.append((tail(u), head(v), big))
        if v != g.root:
            arcs.append((tail(v), head(u), big))
    return FlowNetwork(nxt, tuple(arcs), source, sink, split, big)


class MaxFlow:
    """Dinic's algorithm on float capacities.

    Residual capacities at or below ``eps`` count as saturated.
    """

    def __init__(self, n: int, eps: float = FLOW_EPS):
        self.n = n
        self.eps = eps
        self.head: list[int] = []
        self.cap: list[float] = []
        self.adj: list[list[int]] = [[] for _ in range(n)]

    def add_arc(self, u: int, v: int, c: float) -> int:
        k = len(self.head)
        self.head += [v, u]
        self.cap += [c, 0.0]
        self.adj[u].append(k)
        self.adj[v].append(k + 1)
        return k

    def _levels(self, s, t):
        level = [-1] * self.n
        level[s] = 0
        q = deque([s])
        head, cap, adj, eps = self.head, self.cap, self.adj, self.eps
        while q:
            u = q.popleft()
            for k in adj[u]:
                v = head[k]
                if level[v] < 0 and cap[k] > eps:
                    level[v] = level[u] + 1
                    q.append(v)
        return level if level[t] >= 0 else None

    def _blocking(self, s, t, level):
        head, cap, adj, eps = self.head, self.cap, self.adj, self.eps
        it = [0] * self.n
        total = 0.0
        while True:
            # iterative DFS for one augmenting path in the level graph
            path: list[int] = []
            u = s
            while u != t:
                ks = adj[u]
                i = it[u]
                while i < len(ks):
                    k = ks[i]
                    v = head[k]
                    if cap[k] > eps and level[v] == level[u] + 1:
                        break
                    i += 1
                it[u] = i
                if i == len(ks):
                    if u == s:
                        return total
                    level[u] = -1
                    k = path.pop()
                    u = head[k ^ 1]
                    it[u] += 1
                    continue
                path.append(ks[i])
                u = head[ks[i]]
            push = min(cap[k] for k in path)
            for k in path:
                cap[k] -= push
                cap[k ^ 1] += push
            total += push

    def run(self, s: int, t: int) -> float:
        flow = 0.0
        while True:
            level = self._levels(s, t)
            if level is None:
                return flow
            flow += self._blocking(s, t, level)

    def source_side(self, s: int) -> list[bool]:
        seen = [False] * self.n
        seen[s] = True
        q = deque([s])
        while q:
            u = q.popleft()
            for k in self.adj[u]:
                v = self.head[k]
                if not seen[v] and self.cap[k] > self.eps:
                    seen[v] = True
                    q.append(v)
        return seen


class FlowProbe(NamedTuple):
    T: float
    flow: float
    feasible: bool
    throughput: dict
    cut_source_arcs: int
    cut_energy: float
    cut_nodes: tuple[int, ...]
    cut_is_finite: bool


def probe(g: NetworkGraph, T: float, eps: float = FLOW_EPS) -> FlowProbe:
    """Solve the max flow at lifetime ``T`` and describe the min cut."""
    net = build_flow_network(g, T)
    mf = MaxFlow(net.n_nodes, eps)
    split_arc = {}
    source_arc = {}
    for t, h, c in net.arcs:
        k = mf.add_arc(t, h, c)
        if t == net.source:
            source_arc[h] = k
    for i, (i_in, i_out) in net.split.items():
        split_arc[i] = next(k for k in mf.adj[i_in] if k % 2 == 0 and mf.head[k] == i_out)
    flow = mf.run(net.source, net.sink)
    m = len(net.split)
    feasible = flow >= m * T - eps * m
    side = mf.source_side(net.source)
    a = sum(1 for i, (i_in, _) in net.split.items() if not side[i_in])
    b = 0.0
    nodes = []
    for i, (i_in, i_out) in net.split.items():
        if side[i_in] and not side[i_out]:
            b += g.energy[i]
            nodes.append(i)
    finite = True
    for t, h, c in net.arcs:
        if c == net.infinite and side[t] and not side[h]:
            finite = False
    through = {i: g.energy[i] - mf.cap[k] for i, k in split_arc.items()}
    return FlowProbe(T, flow, feasible, through, a, b, tuple(sorted(nodes)), finite)


def is_feasible(g: NetworkGraph, T: float, eps: float = FLOW_EPS) -> bool:
    """True iff every sensor can ship ``T`` per epoch to the root (up to ``eps``)."""
    if T <= 0:
        return True
    return probe(g, T, eps).feasible


class LPBound(NamedTuple):
    t_lp: float
    cut_nodes: tuple[int, ...]
    probes: int


def lp_bound(g: NetworkGraph, rel_tol: float = 1e-6, eps: float = FLOW_EPS) -> LPBound:
    """Largest multipath lifetime, with the energy-saturated nodes of the limiting cut."""
    if not is_connected(g):
        raise ValueError("graph is disconnected")
    m = g.n - 1
    if m == 0:
        raise ValueError("graph has no sensors")
    emin = g.e_min()
    first = probe(g, emin, eps)
    if first.feasible:
        nodes = tuple(i for i in range(g.n) if i != g.root and g.energy[i] == emin)
        return LPBound(emin, nodes, 1)
    lo, hi = 0.0, emin
    cut = first.cut_nodes
    count = 1

    def tighten(p: FlowProbe):
        nonlocal hi, cut
        if p.cut_is_finite and m - p.cut_source_arcs > 0:
            bound = p.cut_energy / (m - p.cut_source_arcs)
            if bound < hi:
                hi = bound
                cut = p.cut_nodes

    tighten(first)
    hi = min(hi, first.T)
    while hi - lo > rel_tol * emin:
        # try the cut bound first; when it is feasible the bracket closes exactly
        p = probe(g, hi, eps)
        count += 1
        if p.feasible:
            lo = hi
            break
        before = hi
        tighten(p)
        if before - hi < 0.5 * (before - lo):
            mid = 0.5 * (lo + hi)
            q = probe(g, mid, eps)
            count += 1
            if q.feasible:
                lo = mid
            else:
                hi = min(hi, mid)
                tighten(q)
    return LPBound(lo, cut, count)


def lp_upper_bound(g: NetworkGraph, rel_tol: float = 1e-6) -> float:
    return lp_bound(g, rel_tol).t_lp
