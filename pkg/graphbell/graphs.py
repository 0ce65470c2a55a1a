"""
Graphs that seed the stabilizer construction.

Vertices are 1-indexed at the boundary (JSON, CLI, reports) and 0-indexed
inside `Graph`. A graph with an isolated vertex is rejected outright;
a disconnected one is accepted and flagged.
"""

from __future__ import annotations

import hashlib
import json
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations

import networkx as nx

from graphbell.errors import GraphError

BUILTIN_KINDS = ("star", "ring", "line", "complete")


@dataclass(frozen=True)
class Graph:
    n: int
    edges: frozenset[tuple[int, int]]  # 0-indexed, i < j

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> "Graph":
        """Validate 1-indexed `edges` on `n` vertices and build the graph."""
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            raise GraphError(f"vertex count must be a positive integer, got {n!r}",
                             reason="out_of_range")
        seen: set[tuple[int, int]] = set()
        for edge in edges:
            if not isinstance(edge, (list, tuple)):
                raise GraphError(f"edge {edge!r} is not a vertex pair", reason="parse")
            if len(edge) != 2:
                raise GraphError(f"edge {list(edge)} must have two endpoints",
                                 reason="parse")
            a, b = edge
            if not all(isinstance(v, int) and not isinstance(v, bool) for v in (a, b)):
                raise GraphError(f"edge {list(edge)} has non-integer endpoints",
                                 reason="parse")
            if a == b:
                raise GraphError(f"self-loop at vertex {a}", reason="self_loop")
            if not (1 <= a <= n and 1 <= b <= n):
                raise GraphError(f"edge {a}-{b} has an endpoint outside [1, {n}]",
                                 reason="out_of_range")
            key = (min(a, b) - 1, max(a, b) - 1)
            if key in seen:
                raise GraphError(f"duplicate edge {key[0] + 1}-{key[1] + 1}",
                                 reason="duplicate_edge")
            seen.add(key)

        degree = [0] * n
        for a, b in seen:
            degree[a] += 1
            degree[b] += 1
        isolated = [i + 1 for i, d in enumerate(degree) if d == 0]
        if isolated:
            raise GraphError(f"isolated vertex {isolated[0]} (every vertex needs a neighbour)",
                             reason="isolated_vertex")
        return cls(n, frozenset(seen))

    # ─── Adjacency ────────────────────────────────────────────────────────

    @cached_property
    def adjacency(self) -> tuple[frozenset[int], ...]:
        nbrs: list[set[int]] = [set() for _ in range(self.n)]
        for a, b in self.edges:
            nbrs[a].add(b)
            nbrs[b].add(a)
        return tuple(frozenset(s) for s in nbrs)

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.adjacency)

    @property
    def n_max(self) -> int:
        return max(self.degrees)

    @cached_property
    def is_connected(self) -> bool:
        return nx.is_connected(self.to_networkx())

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(self.edges)
        return g

    # ─── Serialization ────────────────────────────────────────────────────

    def edge_list(self) -> list[list[int]]:
        """Sorted 1-indexed edges."""
        return [[a + 1, b + 1] for a, b in sorted(self.edges)]

    def to_dict(self) -> dict:
        return {"n": self.n, "edges": self.edge_list()}

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"), sort_keys=True)

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def __str__(self) -> str:
        edges = " ".join(f"{a}-{b}" for a, b in self.edge_list())
        return f"Graph(n={self.n}, edges=[{edges}])"


# ─── Construction ─────────────────────────────────────────────────────────────

def load_graph(text: str) -> Graph:
    """Parse `{"n": int, "edges": [[i, j], ...]}` into a validated Graph."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphError(f"graph JSON does not parse: {exc}", reason="parse") from exc
    if not isinstance(doc, dict) or "n" not in doc or "edges" not in doc:
        raise GraphError('graph JSON must be an object with "n" and "edges"',
                         reason="parse")
    if not isinstance(doc["edges"], list):
        raise GraphError('"edges" must be a list of vertex pairs', reason="parse")
    return Graph.from_edges(doc["n"], doc["edges"])


def builtin_graph(kind: str, n: int) -> Graph:
    if kind not in BUILTIN_KINDS:
        raise GraphError(f"unknown graph family {kind!r}; expected one of {BUILTIN_KINDS}",
                         reason="unsupported")
    minimum = 3 if kind == "ring" else 2
    if n < minimum:
        raise GraphError(f"{kind} graph needs n ≥ {minimum}, got {n}", reason="unsupported")

    if kind == "star":
        edges = [(1, j) for j in range(2, n + 1)]
    elif kind == "ring":
        edges = [(i, i + 1) for i in range(1, n)] + [(1, n)]
    elif kind == "line":
        edges = [(i, i + 1) for i in range(1, n)]
    else:
        edges = list(combinations(range(1, n + 1), 2))
    return Graph.from_edges(n, edges)


# ─── Combinatorial helpers ────────────────────────────────────────────────────

def _check_vertex(g: Graph, i: int) -> None:
    if not 1 <= i <= g.n:
        raise GraphError(f"vertex {i} outside [1, {g.n}]", reason="out_of_range")


def neighborhood(g: Graph, i: int) -> frozenset[int]:
    """1-indexed neighbours of vertex `i`."""
    _check_vertex(g, i)
    return frozenset(j + 1 for j in g.adjacency[i - 1])


def pivot_vertex(g: Graph) -> int:
    """Lowest-index vertex of maximal degree (1-indexed)."""
    return g.degrees.index(g.n_max) + 1


def relabel(g: Graph, perm: Sequence[int]) -> Graph:
    """Map vertex v to perm[v - 1]; `perm` is a 1-indexed bijection on [1, n]."""
    if sorted(perm) != list(range(1, g.n + 1)):
        raise GraphError(f"{list(perm)} is not a permutation of 1..{g.n}",
                         reason="bad_permutation")
    return Graph.from_edges(g.n, [(perm[a - 1], perm[b - 1]) for a, b in g.edge_list()])


def inverse_permutation(perm: Sequence[int]) -> list[int]:
    inv = [0] * len(perm)
    for src, dst in enumerate(perm, start=1):
        inv[dst - 1] = src
    return inv


def pivot_permutation(g: Graph) -> list[int]:
    """Transposition that brings the pivot to vertex 1 (identity if it already is)."""
    p = pivot_vertex(g)
    perm = list(range(1, g.n + 1))
    perm[0], perm[p - 1] = p, 1
    return perm


def edge_parity(g: Graph, subset: Iterable[int]) -> int:
    """Parity of the number of edges with both endpoints in `subset` (1-indexed)."""
    chosen = set()
    for v in subset:
        _check_vertex(g, v)
        chosen.add(v - 1)
    return sum(1 for a, b in g.edges if a in chosen and b in chosen) % 2


def edge_parity_mask(g: Graph, mask: int) -> int:
    """`edge_parity` with the subset given as a basis index (vertex 1 = MSB)."""
    bit = [(mask >> (g.n - 1 - v)) & 1 for v in range(g.n)]
    return sum(bit[a] & bit[b] for a, b in g.edges) % 2
