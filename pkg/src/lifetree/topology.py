"""Communication graphs for sensor networks.

Nodes are dropped uniformly at random in a square, linked when they are
within radio range of each other (closed unit disk), and given energies
drawn from a uniform distribution whose spread is set by the energy
ratio ``alpha = e_max / e_min`` at a fixed mean.

Randomness comes from numpy's PCG64 generator. Placement and energies
use independent substreams of the same integer seed, so changing the
energy distribution never moves the nodes.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

PLACEMENT_STREAM = 0
ENERGY_STREAM = 1

ROOT_POSITIONS = ("random", "corner", "center")


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), stream])


@dataclass(frozen=True)
class NodePlacement:
    n: int
    area_side: float
    coords: tuple[tuple[float, float], ...]
    seed: int | None = None

    def __post_init__(self):
        if len(self.coords) != self.n:
            raise ValueError(f"expected {self.n} coordinate pairs, got {len(self.coords)}")


@dataclass(frozen=True)
class EnergySpec:
    alpha: float = 1.0
    mean: float = 1000.0
    seed: int = 0

    def __post_init__(self):
        if self.alpha < 1:
            raise ValueError(f"energy ratio alpha must be >= 1, got {self.alpha}")
        if self.mean <= 0:
            raise ValueError(f"mean energy must be positive, got {self.mean}")

    @property
    def e_min(self) -> float:
        return 2.0 * self.mean / (1.0 + self.alpha)

    @property
    def e_max(self) -> float:
        return self.alpha * self.e_min


@dataclass(frozen=True)
class NetworkGraph:
    """Undirected communication graph with per-node energy and a root.

    ``energy[root]`` is stored but never read by the solvers; the base
    station has unlimited energy.
    """

    energy: tuple[float, ...]
    edges: frozenset[tuple[int, int]]
    root: int = 0
    coords: tuple[tuple[float, float], ...] | None = None
    area_side: float | None = None

    def __post_init__(self):
        n = len(self.energy)
        if n < 1:
            raise ValueError("graph needs at least one node")
        if not 0 <= self.root < n:
            raise ValueError(f"root {self.root} out of range for {n} nodes")
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) has an invalid endpoint")
            if u > v:
                raise ValueError(f"edge ({u}, {v}) must be stored with the smaller id first")
        for i, e in enumerate(self.energy):
            if i != self.root and not e > 0:
                raise ValueError(f"node {i} has non-positive energy {e}")
        if self.coords is not None and len(self.coords) != n:
            raise ValueError("coords length does not match node count")

    @classmethod
    def from_edges(cls, energy: Sequence[float], edges: Iterable[tuple[int, int]],
                   root: int = 0, **kwargs) -> "NetworkGraph":
        """Build a graph from an edge list in any orientation; duplicates collapse."""
        norm = set()
        for u, v in edges:
            u, v = int(u), int(v)
            norm.add((u, v) if u < v else (v, u))
        return cls(tuple(float(e) for e in energy), frozenset(norm), root, **kwargs)

    @property
    def n(self) -> int:
        return len(self.energy)

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        """Sorted neighbor lists, indexed by node id."""
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return tuple(tuple(sorted(a)) for a in adj)

    def has_edge(self, u: int, v: int) -> bool:
        return ((u, v) if u < v else (v, u)) in self.edges

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def e_min(self) -> float:
        """Smallest non-root energy (infinite for a lone root)."""
        return min((e for i, e in enumerate(self.energy) if i != self.root), default=math.inf)

    def with_energy(self, energy: Sequence[float]) -> "NetworkGraph":
        return NetworkGraph(tuple(float(e) for e in energy), self.edges, self.root,
                            self.coords, self.area_side)


def generate_placement(n: int, area_side: float, seed: int,
                       root_position: str = "random") -> NodePlacement:
    """Place ``n`` nodes i.i.d. uniformly in ``[0, area_side]^2``.

    Node 0 is the base station. ``root_position`` can pin it to the
    origin corner or the center of the square instead of a random spot;
    the other nodes are drawn identically either way.
    """
    if n < 2:
        raise ValueError(f"a network needs a root and at least one sensor (n={n})")
    if not area_side > 0:
        raise ValueError(f"area_side must be positive, got {area_side}")
    if root_position not in ROOT_POSITIONS:
        raise ValueError(f"root_position must be one of {ROOT_POSITIONS}")
    pts = _rng(seed, PLACEMENT_STREAM).uniform(0.0, area_side, size=(n, 2))
    if root_position == "corner":
        pts[0] = (0.0, 0.0)
    elif root_position == "center":
        pts[0] = (area_side / 2.0, area_side / 2.0)
    coords = tuple((float(x), float(y)) for x, y in pts)
    return NodePlacement(n, float(area_side), coords, seed)


def mean_spacing(area_side: float, n: int) -> float:
    return math.sqrt(area_side * area_side / n)


def scaled_range(l_r: float, area_side: float, n: int) -> float:
    """Radio range in units of the mean node spacing ``sqrt(area_side**2 / n)``."""
    if l_r <= 0 or area_side <= 0 or n <= 0:
        raise ValueError("scaled_range arguments must be positive")
    return l_r / mean_spacing(area_side, n)


def radio_range(r: float, area_side: float, n: int) -> float:
    """Inverse of :func:`scaled_range`."""
    return r * mean_spacing(area_side, n)


def build_disk_graph(placement: NodePlacement, l_r: float, energies: Sequence[float],
                     root: int = 0) -> NetworkGraph:
    """Link every pair of nodes at Euclidean distance ``<= l_r``."""
    n = placement.n
    if len(energies) != n:
        raise ValueError(f"got {len(energies)} energies for {n} nodes")
    if not 0 <= root < n:
        raise ValueError(f"root {root} out of range")
    pts = np.asarray(placement.coords, dtype=float)
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=-1))
    iu, ju = np.nonzero(np.triu(dist <= l_r, k=1))
    edges = frozenset(zip(iu.tolist(), ju.tolist()))
    return NetworkGraph(tuple(float(e) for e in energies), edges, root,
                        placement.coords, placement.area_side)


def assign_energies(n: int, spec: EnergySpec) -> list[float]:
    """Draw ``n`` energies uniformly from ``[e_min, e_max]`` of ``spec``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    lo, hi = spec.e_min, spec.e_max
    if lo == hi:
        return [float(lo)] * n
    return _rng(spec.seed, ENERGY_STREAM).uniform(lo, hi, size=n).tolist()


def reachable(g: NetworkGraph, start: int | None = None) -> list[bool]:
    start = g.root if start is None else start
    seen = [False] * g.n
    seen[start] = True
    queue = deque([start])
    adj = g.adjacency
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                queue.append(v)
    return seen


def is_connected(g: NetworkGraph) -> bool:
    return all(reachable(g))


def random_network(n: int, area_side: float, r: float, alpha: float = 1.0,
                   mean_energy: float = 1000.0, seed: int = 0,
                   root_position: str = "random") -> NetworkGraph:
    """Placement, energies and disk graph from one seed; may be disconnected."""
    placement = generate_placement(n, area_side, seed, root_position)
    energies = assign_energies(n, EnergySpec(alpha, mean_energy, seed))
    return build_disk_graph(placement, radio_range(r, area_side, n), energies)


# -- JSON -------------------------------------------------------------------

def graph_to_dict(g: NetworkGraph) -> dict:
    nodes = []
    for i in range(g.n):
        x, y = g.coords[i] if g.coords is not None else (None, None)
        e = g.energy[i]
        nodes.append({"id": i, "x": x, "y": y, "energy": None if math.isinf(e) else e})
    return {
        "n": g.n,
        "root": g.root,
        "area_side": g.area_side,
        "nodes": nodes,
        "edges": [list(e) for e in g.sorted_edges()],
    }


def graph_from_dict(data: dict) -> NetworkGraph:
    n = int(data["n"])
    nodes = sorted(data["nodes"], key=lambda d: d["id"])
    if [d["id"] for d in nodes] != list(range(n)):
        raise ValueError("node ids must be exactly 0..n-1")
    energy = [math.inf if d.get("energy") is None else float(d["energy"]) for d in nodes]
    coords = None
    if all(d.get("x") is not None and d.get("y") is not None for d in nodes):
        coords = tuple((float(d["x"]), float(d["y"])) for d in nodes)
    area = data.get("area_side")
    return NetworkGraph.from_edges(energy, [tuple(e) for e in data["edges"]],
                                   int(data["root"]), coords=coords,
                                   area_side=None if area is None else float(area))


def save_graph(g: NetworkGraph, path: str | Path) -> None:
    Path(path).write_text(json.dumps(graph_to_dict(g), indent=1) + "\n")


def load_graph(path: str | Path) -> NetworkGraph:
    return graph_from_dict(json.loads(Path(path).read_text()))
