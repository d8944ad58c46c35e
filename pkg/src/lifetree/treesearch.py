"""Tree builders for unaggregated and partially aggregated queries.

``min_hop_tree`` is the breadth-first baseline. ``ecrt`` grows a tree
from the root, Prim style, always attaching the node that hurts the
partial tree's lifetime least. ``local_opt`` moves single nodes to a
new parent while that improves the sorted vector of node lifetimes.

Both heuristics keep per-node raw inflow and capped outflow and only
touch the ancestor chains a move affects, which keeps N = 400 runs
fast enough for full sweeps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lifetime import (FullyAggregated, QueryModel, RoutingTree, flow_cap, flow_rate,
                       validate_tree, InvalidTreeError)
from .topology import NetworkGraph

IMPROVE_TOL = 1e-12


@dataclass
class SearchTrace:
    steps: list[tuple[str, int, int, float]] = field(default_factory=list)
    iterations: int = 0


def _parse_tie_break(tie_break):
    if tie_break in (None, "lowest"):
        return None
    if isinstance(tie_break, str) and tie_break.startswith("random:"):
        return np.random.default_rng(int(tie_break.split(":", 1)[1]))
    if isinstance(tie_break, int):
        return np.random.default_rng(tie_break)
    raise ValueError(f"unknown tie-break {tie_break!r}")


def hop_levels(g: NetworkGraph) -> list[int]:
    level = [-1] * g.n
    level[g.root] = 0
    order = [g.root]
    adj = g.adjacency
    for u in order:
        for v in adj[u]:
            if level[v] < 0:
                level[v] = level[u] + 1
                order.append(v)
    return level


def min_hop_tree(g: NetworkGraph, tie_break="lowest") -> RoutingTree:
    """Shortest-hop (BFS) tree.

    Among the neighbors one hop closer to the root, the parent is the
    lowest id, or a seeded uniform pick with ``tie_break="random:<seed>"``.
    """
    rng = _parse_tie_break(tie_break)
    level = hop_levels(g)
    if min(level) < 0:
        raise ValueError("graph is disconnected")
    adj = g.adjacency
    parent: list[int | None] = [None] * g.n
    for v in range(g.n):
        if v == g.root:
            continue
        cands = [u for u in adj[v] if level[u] == level[v] - 1]
        parent[v] = cands[0] if rng is None else cands[int(rng.integers(len(cands)))]
    return RoutingTree(tuple(parent), g.root)


def _require_flow_model(model: QueryModel, name: str) -> None:
    if isinstance(model, FullyAggregated):
        raise ValueError(f"{name} handles unaggregated and partially aggregated queries only")


def ecrt(g: NetworkGraph, model: QueryModel, trace: SearchTrace | None = None) -> RoutingTree:
    """Greedy growth that keeps the partial tree's lifetime as high as possible.

    Attaching ``v`` below ``u`` adds one unit on every ancestor of ``u``
    (until a capped record stops the increase), so the new lifetime is
    ``min(current, path_min[u], e_v / rate(1))`` where ``path_min[u]`` is
    the worst ratio along ``u``'s chain after the extra unit. Ties prefer
    the higher-energy node, then the lower node id, then the lower parent id.
    """
    _require_flow_model(model, "ECRT")
    n, root, energy, adj = g.n, g.root, g.energy, g.adjacency
    cap = flow_cap(model)
    rate = [flow_rate(model, k) for k in range(int(min(cap, n)) + 2)]
    parent: list[int | None] = [None] * n
    in_tree = [False] * n
    in_tree[root] = True
    raw = [0] * n
    f = [0] * n
    order = [root]
    current = math.inf
    leaf_life = [energy[v] / rate[1] for v in range(n)]
    path_min = [math.inf] * n

    for _ in range(n - 1):
        for x in order:
            if x == root:
                path_min[x] = math.inf
            elif raw[x] >= cap:
                path_min[x] = math.inf
            else:
                bump = energy[x] / rate[f[x] + 1]
                pm = path_min[parent[x]]
                path_min[x] = bump if bump < pm else pm
        best = None
        for v in range(n):
            if in_tree[v]:
                continue
            cap_v = min(current, leaf_life[v])
            pu, val = None, -1.0
            for u in adj[v]:
                if in_tree[u]:
                    life = path_min[u] if path_min[u] < cap_v else cap_v
                    if life > val:
                        pu, val = u, life
            if pu is None:
                continue
            key = (val, energy[v], -v, -pu)
            if best is None or key > best[0]:
                best = (key, v, pu)
        if best is None:
            raise ValueError("graph is disconnected")
        (val, _, _, _), v, u = best
        parent[v] = u
        in_tree[v] = True
        order.append(v)
        raw[v] = f[v] = 1
        x, delta = u, 1
        while x != root and delta:
            old = f[x]
            raw[x] += delta
            f[x] = raw[x] if raw[x] < cap else cap
            delta = f[x] - old
            x = parent[x]
        current = val
        if trace is not None:
            trace.steps.append(("add", v, u, val))
            trace.iterations += 1
    return RoutingTree(tuple(parent), root)


class _FlowState:
    """Mutable tree with raw inflows, capped outflows and per-node ratios."""

    def __init__(self, g: NetworkGraph, t: RoutingTree, model: QueryModel):
        self.g = g
        self.n, self.root = g.n, g.root
        self.model = model
        self.cap = flow_cap(model)
        self.parent = list(t.parent)
        self.raw = [0] * self.n
        self.f = [0] * self.n
        for u in reversed(t.order()):
            if u == self.root:
                continue
            self.raw[u] += 1
            self.f[u] = min(self.cap, self.raw[u])
            p = self.parent[u]
            if p != self.root:
                self.raw[p] += self.f[u]
        self.ratio = [math.inf] * self.n
        for u in range(self.n):
            if u != self.root:
                self.ratio[u] = self.life(u, self.f[u])
        self.resort()

    def life(self, u, f):
        return self.g.energy[u] / flow_rate(self.model, f)

    def resort(self):
        self.ranked = sorted((self.ratio[u], u) for u in range(self.n) if u != self.root)

    @property
    def lifetime(self):
        return self.ranked[0][0] if self.ranked else math.inf

    def min_excluding(self, changed):
        for r, u in self.ranked:
            if u not in changed:
                return r
        return math.inf

    def ancestors(self, v):
        anc = {}
        x = self.parent[v]
        while x is not None:
            anc[x] = len(anc)
            x = self.parent[x]
        return anc

    def _push(self, x, delta, stop, changes):
        cap, raw, f, parent, root = self.cap, self.raw, self.f, self.parent, self.root
        while x != stop and x != root and delta:
            r = changes[x][0] + delta if x in changes else raw[x] + delta
            nf = r if r < cap else cap
            of = changes[x][1] if x in changes else f[x]
            changes[x] = (r, nf)
            delta = nf - of
            x = parent[x]
        return delta

    def switch_effect(self, v, u, lca):
        """New (raw, f) for every node whose flow changes if ``v`` moves below ``u``."""
        fv = self.f[v]
        changes: dict[int, tuple[float, float]] = {}
        d_right = self._push(u, fv, lca, changes)
        d_left = self._push(self.parent[v], -fv, lca, changes)
        self._push(lca, d_left + d_right, None, changes)
        return changes

    def apply(self, v, u, changes):
        self.parent[v] = u
        for x, (r, nf) in changes.items():
            self.raw[x] = r
            self.f[x] = nf
            self.ratio[x] = self.life(x, nf)
        self.resort()


def local_opt(g: NetworkGraph, t0: RoutingTree, model: QueryModel,
              trace: SearchTrace | None = None, max_sweeps: int | None = None,
              acceptance: str = "leximin") -> RoutingTree:
    """Single-node parent switching until no switch improves the tree.

    Nodes are visited in ascending id. For each node every neighbor
    outside its own subtree is tried as the new parent and the best
    improving one is taken.

    ``acceptance="strict"`` only counts a switch that raises the tree
    lifetime by more than a relative 1e-12. On equal-energy networks that
    stalls at once: many nodes share the bottleneck and no single move
    lifts all of them. The default ``"leximin"`` also accepts a switch
    when the sorted lifetimes of the nodes it touches beat the old ones
    lexicographically. The tree lifetime never drops, the sorted vector
    of all node lifetimes strictly rises, so the search still ends.
    Candidates are ranked by resulting tree lifetime, then by the
    touched lifetimes. Sweeps repeat until one makes no switch;
    ``max_sweeps`` (default ``10 N^2``) aborts a runaway search with
    RuntimeError.
    """
    _require_flow_model(model, "LOCAL-OPT")
    if acceptance not in ("leximin", "strict"):
        raise ValueError(f"unknown acceptance rule {acceptance!r}")
    bad = validate_tree(t0, g)
    if bad:
        raise InvalidTreeError(bad)
    strict = acceptance == "strict"
    n, root, adj = g.n, g.root, g.adjacency
    st = _FlowState(g, t0, model)
    limit = max_sweeps if max_sweeps is not None else 10 * n * n
    sweeps = 0
    while True:
        sweeps += 1
        if sweeps > limit:
            raise RuntimeError(f"LOCAL-OPT did not settle within {limit} sweeps "
                               f"(lifetime {st.lifetime:.9g})")
        switched = False
        for v in range(n):
            if v == root:
                continue
            T = st.lifetime
            anc = st.ancestors(v)
            p = st.parent[v]
            best = None
            for u in adj[v]:
                if u == p:
                    continue
                x = u
                while x != v and x not in anc:
                    x = st.parent[x]
                if x == v:
                    continue
                changes = st.switch_effect(v, u, x)
                key = _switch_key(st, changes, T, strict)
                if key is not None and (best is None or key > best[0]):
                    best = (key, u, changes)
            if best is not None:
                _, u, changes = best
                st.apply(v, u, changes)
                switched = True
                if trace is not None:
                    trace.steps.append(("switch", v, u, st.lifetime))
        if trace is not None:
            trace.iterations = sweeps
        if not switched:
            break
    return RoutingTree(tuple(st.parent), root)


def _switch_key(st, changes, T, strict):
    """Rank a candidate switch; None when it does not improve the tree."""
    floor = T * (1 - IMPROVE_TOL)
    new_t = st.min_excluding(changes)
    if new_t < floor:
        return None
    new, old = [], []
    for y, (_, nf) in changes.items():
        life = st.life(y, nf)
        if life < floor:
            return None
        new.append(life)
        old.append(st.ratio[y])
    new.sort()
    if new and new[0] < new_t:
        new_t = new[0]
    if new_t > T * (1 + IMPROVE_TOL):
        return (new_t, tuple(new))
    if strict:
        return None
    old.sort()
    for a, b in zip(new, old):
        if a > b * (1 + IMPROVE_TOL):
            return (new_t, tuple(new))
        if a < b * (1 - IMPROVE_TOL):
            return None
    return None


def ecrt_local_opt(g: NetworkGraph, model: QueryModel, trace: SearchTrace | None = None) -> RoutingTree:
    return local_opt(g, ecrt(g, model, trace), model, trace)
