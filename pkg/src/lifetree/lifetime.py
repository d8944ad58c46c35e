"""Routing trees and their lifetime under the three query models.

Every sensor produces one unit of data per epoch. Transmitting a unit
costs 1, receiving a unit costs ``c_r``. The lifetime of a tree is the
number of epochs until the first non-root node runs dry.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

from .topology import NetworkGraph

REL_TOL = 1e-9


# -- query models -----------------------------------------------------------

def _check_rx(c_r: float) -> None:
    if not 0 <= c_r < 1:
        raise ValueError(f"receive cost must satisfy 0 <= c_r < 1, got {c_r}")


@dataclass(frozen=True)
class FullyAggregated:
    """Constant-size records (AVG, MAX, ...): one unit out per node."""
    c_r: float = 0.5

    def __post_init__(self):
        _check_rx(self.c_r)

    @property
    def label(self) -> str:
        return "full"


@dataclass(frozen=True)
class Unaggregated:
    """Data volume is conserved on the way to the root."""
    include_rx: bool = False
    c_r: float = 0.0

    def __post_init__(self):
        _check_rx(self.c_r)

    @property
    def label(self) -> str:
        return "unagg"


@dataclass(frozen=True)
class PartiallyAggregated:
    """Records grow toward the root but are capped at ``ell`` units."""
    ell: int
    include_rx: bool = False
    c_r: float = 0.0

    def __post_init__(self):
        _check_rx(self.c_r)
        if isinstance(self.ell, bool) or int(self.ell) != self.ell or self.ell < 1:
            raise ValueError(f"ell must be a positive integer, got {self.ell}")
        object.__setattr__(self, "ell", int(self.ell))

    @property
    def label(self) -> str:
        return f"partial:{self.ell}"


QueryModel = Union[FullyAggregated, Unaggregated, PartiallyAggregated]


def parse_query(text: str, c_r: float = 0.5, include_rx: bool = False) -> QueryModel:
    """Parse ``full``, ``unagg`` or ``partial:<ell>``.

    ``c_r`` always applies to ``full``; for the other two it only matters
    when ``include_rx`` is set.
    """
    text = text.strip().lower()
    if text in ("full", "fully-aggregated"):
        return FullyAggregated(c_r)
    if text in ("unagg", "unaggregated"):
        return Unaggregated(include_rx, c_r if include_rx else 0.0)
    if text.startswith("partial:"):
        ell = float(text.split(":", 1)[1])
        return PartiallyAggregated(ell, include_rx, c_r if include_rx else 0.0)
    raise ValueError(f"unknown query model {text!r}")


def flow_cap(model: QueryModel) -> float:
    """Largest record a node ever forwards."""
    if isinstance(model, FullyAggregated):
        return 1
    if isinstance(model, PartiallyAggregated):
        return model.ell
    return math.inf


def flow_rate(model: QueryModel, f_out: float) -> float:
    """Energy per epoch of a node forwarding ``f_out`` units (flow models only)."""
    if model.include_rx:
        return f_out * (1.0 + model.c_r) - model.c_r
    return float(f_out)


# -- trees ------------------------------------------------------------------

@dataclass(frozen=True)
class RoutingTree:
    """Parent-pointer tree; ``parent[root]`` is None."""

    parent: tuple[int | None, ...]
    root: int = 0

    @classmethod
    def from_parents(cls, parent: Sequence[int | None], root: int = 0) -> "RoutingTree":
        return cls(tuple(None if p is None else int(p) for p in parent), root)

    @classmethod
    def from_edges(cls, n: int, edges, root: int = 0) -> "RoutingTree":
        """Orient an undirected spanning tree toward ``root``."""
        adj: list[list[int]] = [[] for _ in range(n)]
        for u, v in edges:
            adj[u].append(v)
            adj[v].append(u)
        parent: list[int | None] = [None] * n
        seen = [False] * n
        seen[root] = True
        stack = [root]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    parent[v] = u
                    stack.append(v)
        if not all(seen):
            raise ValueError("edge set does not span all nodes")
        return cls(tuple(parent), root)

    @property
    def n(self) -> int:
        return len(self.parent)

    def edges(self) -> list[tuple[int, int]]:
        return [(min(i, p), max(i, p)) for i, p in enumerate(self.parent) if p is not None]

    def children(self) -> list[list[int]]:
        ch: list[list[int]] = [[] for _ in range(self.n)]
        for i, p in enumerate(self.parent):
            if p is not None:
                ch[p].append(i)
        return ch

    def degrees(self) -> list[int]:
        deg = [0] * self.n
        for i, p in enumerate(self.parent):
            if p is not None:
                deg[i] += 1
                deg[p] += 1
        return deg

    def order(self) -> list[int]:
        """Nodes in breadth-first order from the root (parents before children)."""
        ch = self.children()
        out = [self.root]
        for u in out:
            out.extend(ch[u])
        return out

    def depth(self) -> int:
        ch = self.children()
        level = {self.root: 0}
        for u in self.order():
            for c in ch[u]:
                level[c] = level[u] + 1
        return max(level.values())

    def to_dict(self) -> dict:
        return {"root": self.root, "parent": list(self.parent)}

    @classmethod
    def from_dict(cls, data: dict) -> "RoutingTree":
        return cls.from_parents(data["parent"], int(data["root"]))


def save_tree(t: RoutingTree, path: str | Path) -> None:
    Path(path).write_text(json.dumps(t.to_dict()) + "\n")


def load_tree(path: str | Path) -> RoutingTree:
    return RoutingTree.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class Violation:
    kind: str
    node: int | None = None
    detail: str = ""

    def __str__(self):
        where = "" if self.node is None else f" at node {self.node}"
        return f"{self.kind}{where}" + (f": {self.detail}" if self.detail else "")


class InvalidTreeError(ValueError):
    def __init__(self, violations: list[Violation]):
        self.violations = violations
        super().__init__("; ".join(str(v) for v in violations))


def validate_tree(t: RoutingTree, g: NetworkGraph) -> list[Violation]:
    """Check that ``t`` is a spanning tree of ``g`` rooted at ``g.root``.

    Returns an empty list when the tree is valid.
    """
    out: list[Violation] = []
    n = g.n
    if t.n != n:
        return [Violation("size mismatch", None, f"tree has {t.n} nodes, graph has {n}")]
    if t.root != g.root:
        out.append(Violation("wrong root", t.root, f"graph root is {g.root}"))
    if t.parent[t.root] is not None:
        out.append(Violation("root has parent", t.root))
    bad_id = False
    for i, p in enumerate(t.parent):
        if i == t.root:
            continue
        if p is None:
            out.append(Violation("missing parent", i))
        elif not 0 <= p < n or p == i:
            out.append(Violation("bad parent id", i, str(p)))
            bad_id = True
        elif not g.has_edge(i, p):
            out.append(Violation("non-edge parent", i, f"({i}, {p}) is not a graph edge"))
    if bad_id:
        return out
    # 0 = unvisited, 1 = on current chain, 2 = known to reach the root
    state = [0] * n
    state[t.root] = 2
    for start in range(n):
        chain = []
        u = start
        while u is not None and state[u] == 0:
            state[u] = 1
            chain.append(u)
            u = t.parent[u]
        if u is not None and state[u] == 1:
            out.append(Violation("cycle", u, "parent pointers loop"))
        for c in chain:
            state[c] = 2
    return out


def _require_valid(t: RoutingTree, g: NetworkGraph | None) -> None:
    if g is None:
        return
    bad = validate_tree(t, g)
    if bad:
        raise InvalidTreeError(bad)


# -- flows and lifetime -----------------------------------------------------

def outflows(t: RoutingTree, model: QueryModel, g: NetworkGraph | None = None) -> list[float]:
    """Units each node forwards to its parent per epoch; the root forwards 0."""
    _require_valid(t, g)
    cap = flow_cap(model)
    f = [0] * t.n
    parent = t.parent
    for u in reversed(t.order()):
        if u == t.root:
            continue
        f[u] = min(cap, f[u] + 1)
        p = parent[u]
        if p != t.root:
            f[p] += f[u]
    f[t.root] = 0
    return f


def rates(t: RoutingTree, model: QueryModel, g: NetworkGraph | None = None) -> list[float]:
    """Energy spent per epoch by each node (0 at the root)."""
    if isinstance(model, FullyAggregated):
        _require_valid(t, g)
        deg = t.degrees()
        r = [1.0 + model.c_r * (d - 1) for d in deg]
    else:
        f = outflows(t, model, g)
        r = [flow_rate(model, x) for x in f]
    r[t.root] = 0.0
    return r


@dataclass(frozen=True)
class LifetimeReport:
    outflow: tuple[float, ...]
    rate: tuple[float, ...]
    lifetime: float
    bottleneck: int | None
    depth: int = 0
    extra: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {
            "lifetime": float(f"{self.lifetime:.6g}") if math.isfinite(self.lifetime) else None,
            "bottleneck": self.bottleneck,
            "depth": self.depth,
            "outflow": list(self.outflow),
            "rate": list(self.rate),
            **self.extra,
        }


def lifetime(t: RoutingTree, g: NetworkGraph, model: QueryModel) -> LifetimeReport:
    """Epochs until the first non-root node exhausts its energy."""
    _require_valid(t, g)
    if isinstance(model, FullyAggregated):
        f = [0 if i == t.root else 1 for i in range(t.n)]
    else:
        f = outflows(t, model)
    r = rates(t, model)
    best, arg = math.inf, None
    for i in range(t.n):
        if i == t.root:
            continue
        life = g.energy[i] / r[i]
        if life < best:
            best, arg = life, i
    return LifetimeReport(tuple(f), tuple(r), best, arg, t.depth())


def tree_lifetime(t: RoutingTree, g: NetworkGraph, model: QueryModel) -> float:
    return lifetime(t, g, model).lifetime


def verify_ip_feasibility(t: RoutingTree, g: NetworkGraph, T: float) -> list[Violation]:
    """Substitute ``t`` into the tree-routing integer program at lifetime ``T``.

    Parent indicators ``x_ij`` and edge flows ``f_ij`` (unaggregated,
    transmission only) are read off the tree, then each constraint is
    checked: one parent per sensor, outflow minus inflow equals one,
    ``x_ij <= f_ij <= (e_i / T) x_ij``, and non-negativity. An empty
    list means the program is feasible for this assignment.
    """
    _require_valid(t, g)
    n, root = g.n, g.root
    fout = outflows(t, Unaggregated())
    x: dict[tuple[int, int], int] = {}
    f: dict[tuple[int, int], float] = {}
    for u, v in g.edges:
        for i, j in ((u, v), (v, u)):
            is_parent = t.parent[i] == j
            x[i, j] = 1 if is_parent else 0
            f[i, j] = fout[i] if is_parent else 0
    out: list[Violation] = []
    adj = g.adjacency
    for i in range(n):
        if i == root:
            continue
        if sum(x[i, j] for j in adj[i]) != 1:
            out.append(Violation("one-parent", i, f"sum_j x_ij = {sum(x[i, j] for j in adj[i])}"))
        sent = sum(f[i, j] for j in adj[i])
        got = sum(f[j, i] for j in adj[i] if j != root)
        if abs(sent - got - 1) > REL_TOL * max(1.0, sent):
            out.append(Violation("flow-conservation", i, f"out {sent} - in {got} != 1"))
    for (i, j), xij in sorted(x.items()):
        if i == root:
            continue
        fij = f[i, j]
        if xij < 0:
            out.append(Violation("nonnegative-x", i, f"x_{i}{j} = {xij}"))
        if fij < 0:
            out.append(Violation("nonnegative-f", i, f"f_{i}{j} = {fij}"))
        if fij < xij:
            out.append(Violation("min-flow", i, f"f_{i},{j} = {fij} < x = {xij}"))
        cap = g.energy[i] / T * xij if T > 0 else (math.inf if xij else 0.0)
        if fij > cap * (1 + REL_TOL):
            out.append(Violation("energy-capacity", i,
                                 f"f_{i},{j} = {fij} > e_i/T = {cap:.6g}"))
    return out
