"""Connectivity graphs, shortest-path DAGs and path-length queries.

Node 0 is always the base station; sensors are 1..n.
"""

from __future__ import annotations

import builtins
import enum
import hashlib
import json
import math
import random
from collections import deque
from dataclasses import dataclass
from functools import cached_property

from kdag import kernels

MAX_ATTEMPTS = 1000
BASE = 0


class ConnectivityFailure(RuntimeError):
    """No connected instance was found within the attempt bound."""


class DagKind(str, enum.Enum):
    SPT = "SPT"
    SPD = "SPD"
    KDAG = "KDAG"


@dataclass(frozen=True)
class ConnectivityGraph:
    positions: tuple[tuple[float, float], ...]
    range: float
    adjacency: tuple[frozenset[int], ...]
    side: float | None = None
    seed: int | None = None

    @classmethod
    def from_positions(cls, positions, range, side=None, seed=None):
        """Unit-disk graph: an edge whenever two nodes are at most ``range`` apart."""
        pts = tuple((float(x), float(y)) for x, y in positions)
        if not pts:
            raise ValueError("need at least the base station position")
        adj = [set() for _ in pts]
        for i in builtins.range(len(pts)):
            xi, yi = pts[i]
            for j in builtins.range(i + 1, len(pts)):
                if math.hypot(xi - pts[j][0], yi - pts[j][1]) <= range:
                    adj[i].add(j)
                    adj[j].add(i)
        return cls(pts, float(range), tuple(frozenset(a) for a in adj), side, seed)

    @property
    def n(self) -> int:
        """Sensor count (the base station is not counted)."""
        return len(self.positions) - 1

    @property
    def num_nodes(self) -> int:
        return len(self.positions)

    def neighbors(self, v: int) -> frozenset[int]:
        return self.adjacency[v]

    def edges(self):
        return [(i, j) for i, nb in enumerate(self.adjacency) for j in sorted(nb) if i < j]

    def hop_distances(self, source: int = BASE) -> list[int]:
        """Centralized BFS hop counts; -1 marks unreachable nodes."""
        dist = [-1] * self.num_nodes
        dist[source] = 0
        queue = deque([source])
        while queue:
            u = queue.popleft()
            for w in self.adjacency[u]:
                if dist[w] < 0:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        return dist

    def is_connected(self) -> bool:
        return min(self.hop_distances()) >= 0

    @cached_property
    def diameter(self) -> int:
        return max(max(self.hop_distances(v)) for v in range(self.num_nodes))

    def to_json(self) -> str:
        doc = {
            "n": self.n,
            "side": self.side,
            "range": self.range,
            "seed": self.seed,
            "positions": [list(p) for p in self.positions],
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> ConnectivityGraph:
        doc = json.loads(text)
        g = cls.from_positions(doc["positions"], doc["range"], doc.get("side"), doc.get("seed"))
        if doc.get("n") is not None and doc["n"] != g.n:
            raise ValueError(f"instance declares n={doc['n']} but has {g.n} sensors")
        return g


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from any printable parts."""
    digest = hashlib.sha256("/".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def generate_instance(n: int, side: float, range: float, seed: int,
                      max_attempts: int = MAX_ATTEMPTS) -> ConnectivityGraph:
    """Uniformly place ``n`` sensors plus the base station in ``[0, side]^2``.

    Disconnected draws are discarded and redrawn from derived sub-seeds, so the
    result is a pure function of the arguments.
    """
    if n < 1 or side <= 0 or range <= 0:
        raise ValueError("need n >= 1, side > 0 and range > 0")
    for attempt in builtins.range(max_attempts):
        rng = random.Random(derive_seed(seed, attempt))
        pts = [(rng.uniform(0.0, side), rng.uniform(0.0, side)) for _ in builtins.range(n + 1)]
        g = ConnectivityGraph.from_positions(pts, range, side, seed)
        if g.is_connected():
            return g
    raise ConnectivityFailure(
        f"no connected instance for n={n}, side={side}, range={range} "
        f"after {max_attempts} attempts")


@dataclass(frozen=True)
class SpanningDag:
    """Routing DAG oriented base -> leaves; data flows child -> parent."""

    parents: tuple[tuple[int, ...], ...]
    children: tuple[tuple[int, ...], ...]
    depth: tuple[int, ...]
    kind: DagKind

    @classmethod
    def from_parents(cls, parents, depth, kind) -> SpanningDag:
        ps = tuple(tuple(sorted(p)) for p in parents)
        kids = [[] for _ in ps]
        for v, pv in enumerate(ps):
            for p in pv:
                kids[p].append(v)
        return cls(ps, tuple(tuple(sorted(k)) for k in kids), tuple(depth), DagKind(kind))

    @property
    def num_nodes(self) -> int:
        return len(self.parents)

    @property
    def n(self) -> int:
        return len(self.parents) - 1

    def edges(self) -> list[tuple[int, int]]:
        """``(child, parent)`` pairs."""
        return [(v, p) for v, ps in enumerate(self.parents) for p in ps]

    @property
    def edge_count(self) -> int:
        return sum(len(p) for p in self.parents)

    @property
    def base_children(self) -> tuple[int, ...]:
        return self.children[BASE]

    @cached_property
    def order(self) -> list[int]:
        order = kernels.topological_order(self.parents)
        if order is None:
            raise ValueError("parent sets contain a cycle or an unreachable node")
        return order

    @cached_property
    def _ranges(self):
        return kernels.path_ranges(self.parents, self.order)

    def path_length_range(self, v: int) -> tuple[int, int]:
        s, l = self._ranges
        return s[v], l[v]

    def max_path_length(self) -> int:
        """Longest base-to-node path over all nodes."""
        return max(self._ranges[1])

    def max_slack(self) -> int:
        s, l = self._ranges
        return max(b - a for a, b in zip(s, l))

    def descendants(self, v: int) -> set[int]:
        """``v`` and every node reachable from it."""
        seen = {v}
        stack = [v]
        while stack:
            u = stack.pop()
            for c in self.children[u]:
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return seen

    def with_kind(self, kind) -> SpanningDag:
        return SpanningDag(self.parents, self.children, self.depth, DagKind(kind))

    def validate(self, graph: ConnectivityGraph | None = None) -> None:
        """Raise ``ValueError`` if a structural invariant of ``kind`` is broken."""
        if self.parents[BASE]:
            raise ValueError("base station has parents")
        for v in range(1, self.num_nodes):
            if not self.parents[v]:
                raise ValueError(f"node {v} has no parent")
            if graph is not None:
                for p in self.parents[v]:
                    if p not in graph.adjacency[v]:
                        raise ValueError(f"edge {v}->{p} is not a connectivity edge")
        _ = self.order
        if self.kind in (DagKind.SPT, DagKind.SPD):
            for v in range(1, self.num_nodes):
                for p in self.parents[v]:
                    if self.depth[p] != self.depth[v] - 1:
                        raise ValueError(f"parent {p} of {v} is not one hop closer")
        if self.kind is DagKind.SPT and any(len(p) != 1 for p in self.parents[1:]):
            raise ValueError("SPT node with more than one parent")


def build_spd(g: ConnectivityGraph) -> SpanningDag:
    """The maximal shortest-path DAG: every neighbour one hop closer is a parent."""
    depth = g.hop_distances()
    if min(depth) < 0:
        raise ConnectivityFailure("graph is not connected")
    parents = [
        [u for u in g.adjacency[v] if depth[u] == depth[v] - 1] if v != BASE else []
        for v in range(g.num_nodes)
    ]
    return SpanningDag.from_parents(parents, depth, DagKind.SPD)


def extract_spt(spd: SpanningDag) -> SpanningDag:
    """Keep only the smallest-id parent of every node."""
    if spd.kind is DagKind.KDAG:
        raise ValueError("extract_spt expects an SPD or SPT")
    parents = [ps[:1] for ps in spd.parents]
    return SpanningDag.from_parents(parents, spd.depth, DagKind.SPT)


def path_length_range(dag: SpanningDag, v: int) -> tuple[int, int]:
    """(shortest, longest) directed path length from the base station to ``v``."""
    return dag.path_length_range(v)
