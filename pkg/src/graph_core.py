"""
Finite simple graphs with dense integer vertex ids, and the constructions the
walk and percolation code is built from: cycles, paths, grids, Cartesian
products, induced subgraphs, components and edge boundaries.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np
from scipy import sparse

from errors import InvalidArgumentError

Edge = Tuple[int, int]


@dataclass(frozen=True)
class FiniteGraph:
    """
    Immutable simple undirected graph on vertices 0..n-1.

    Build instances with FiniteGraph.from_edges(); the edge tuple is kept
    canonical (u < v, sorted) and neighbor lists are sorted, so iteration
    order never depends on how the graph was assembled.
    """

    n: int
    edges: Tuple[Edge, ...]
    adjacency: Tuple[Tuple[int, ...], ...] = field(repr=False, compare=False)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> "FiniteGraph":
        if n < 1:
            raise InvalidArgumentError(f"A graph needs at least one vertex, got n={n}")
        canonical: set[Edge] = set()
        for pair in edges:
            u, v = int(pair[0]), int(pair[1])
            if u == v:
                raise InvalidArgumentError(f"Self-loop at vertex {u} is not allowed in a simple graph")
            if not (0 <= u < n and 0 <= v < n):
                raise InvalidArgumentError(f"Edge {{{u},{v}}} has an endpoint outside 0..{n - 1}")
            canonical.add((u, v) if u < v else (v, u))
        ordered = tuple(sorted(canonical))
        neighbors: List[List[int]] = [[] for _ in range(n)]
        for u, v in ordered:
            neighbors[u].append(v)
            neighbors[v].append(u)
        adjacency = tuple(tuple(sorted(row)) for row in neighbors)
        return cls(n=n, edges=ordered, adjacency=adjacency)

    @property
    def m(self) -> int:
        return len(self.edges)

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.fromiter((len(row) for row in self.adjacency), dtype=np.int64, count=self.n)

    @property
    def max_degree(self) -> int:
        return int(self.degrees.max()) if self.n else 0

    @cached_property
    def edge_array(self) -> np.ndarray:
        if not self.edges:
            return np.zeros((0, 2), dtype=np.int64)
        return np.asarray(self.edges, dtype=np.int64)

    def adjacency_matrix(self) -> sparse.csr_matrix:
        """Symmetric 0/1 adjacency matrix in CSR form."""
        if self.m == 0:
            return sparse.csr_matrix((self.n, self.n), dtype=np.float64)
        rows = np.concatenate([self.edge_array[:, 0], self.edge_array[:, 1]])
        cols = np.concatenate([self.edge_array[:, 1], self.edge_array[:, 0]])
        data = np.ones(rows.size, dtype=np.float64)
        return sparse.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    def has_edge(self, u: int, v: int) -> bool:
        row = self.adjacency[u]
        idx = int(np.searchsorted(row, v))
        return idx < len(row) and row[idx] == v


@dataclass(frozen=True)
class VertexSubset:
    """A set of vertex ids of a host graph."""

    members: frozenset
    host: FiniteGraph = field(repr=False)

    def __post_init__(self) -> None:
        for v in self.members:
            if not 0 <= v < self.host.n:
                raise InvalidArgumentError(f"Vertex {v} is not a vertex of a graph with n={self.host.n}")

    @classmethod
    def of(cls, host: FiniteGraph, members: Iterable[int]) -> "VertexSubset":
        return cls(members=frozenset(int(v) for v in members), host=host)

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, v: object) -> bool:
        return v in self.members

    def sorted(self) -> List[int]:
        return sorted(self.members)

    def complement(self) -> "VertexSubset":
        return VertexSubset.of(self.host, (v for v in range(self.host.n) if v not in self.members))


def cycle_graph(m: int) -> FiniteGraph:
    """
    Returns the cycle C_m.

    Args:
        m (int): number of vertices, at least 3.

    Returns:
        FiniteGraph: edges {i, (i+1) mod m}.
    """
    if m < 3:
        raise InvalidArgumentError(f"C_{m} is not a simple graph; cycles need m >= 3")
    return FiniteGraph.from_edges(m, ((i, (i + 1) % m) for i in range(m)))


def path_graph(n: int) -> FiniteGraph:
    """Path on n vertices (K1 for n=1, K2 for n=2)."""
    if n < 1:
        raise InvalidArgumentError(f"A path needs at least one vertex, got {n}")
    return FiniteGraph.from_edges(n, ((i, i + 1) for i in range(n - 1)))


def complete_graph(n: int) -> FiniteGraph:
    """Complete graph K_n; every vertex has degree n - 1."""
    if n < 1:
        raise InvalidArgumentError(f"A complete graph needs at least one vertex, got {n}")
    return FiniteGraph.from_edges(n, ((u, v) for u in range(n) for v in range(u + 1, n)))


def grid_graph(rows: int, cols: int) -> FiniteGraph:
    """rows x cols piece of Z^2 with free boundary; vertex (r, c) has id r*cols + c."""
    if rows < 1 or cols < 1:
        raise InvalidArgumentError(f"Grid dimensions must be positive, got {rows}x{cols}")
    edges: List[Edge] = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1))
            if r + 1 < rows:
                edges.append((v, v + cols))
    return FiniteGraph.from_edges(rows * cols, edges)


def cartesian_product(g: FiniteGraph, h: FiniteGraph) -> FiniteGraph:
    """
    Returns the Cartesian product g □ h.

    Vertex (x, v) gets id x*h.n + v. Two vertices are adjacent iff they agree in one
    coordinate and are adjacent in the other factor, so the product has
    g.n*|E(h)| + h.n*|E(g)| edges.
    """
    edges: List[Edge] = []
    for x in range(g.n):
        base = x * h.n
        edges.extend((base + v, base + w) for v, w in h.edges)
    for x, y in g.edges:
        edges.extend((x * h.n + v, y * h.n + v) for v in range(h.n))
    return FiniteGraph.from_edges(g.n * h.n, edges)


def induced_subgraph(g: FiniteGraph, s: VertexSubset) -> Tuple[FiniteGraph, Dict[int, int]]:
    """
    Restricts g to the vertices of s.

    Args:
        g (FiniteGraph): host graph.
        s (VertexSubset): kept vertices, nonempty.

    Returns:
        (FiniteGraph, dict): the induced graph with vertices relabeled 0..|s|-1 in
        increasing old-id order, and the old -> new relabeling map.
    """
    if len(s) == 0:
        raise InvalidArgumentError("Cannot induce a subgraph on an empty vertex set")
    relabel = {old: new for new, old in enumerate(s.sorted())}
    edges = [(relabel[u], relabel[v]) for u, v in g.edges if u in relabel and v in relabel]
    return FiniteGraph.from_edges(len(relabel), edges), relabel


def connected_component(g: FiniteGraph, root: int) -> VertexSubset:
    """Vertices reachable from root (breadth-first), root included."""
    if not 0 <= root < g.n:
        raise InvalidArgumentError(f"Root {root} is not a vertex of a graph with n={g.n}")
    seen = {root}
    frontier = deque([root])
    while frontier:
        v = frontier.popleft()
        for w in g.adjacency[v]:
            if w not in seen:
                seen.add(w)
                frontier.append(w)
    return VertexSubset.of(g, seen)


def is_connected(g: FiniteGraph) -> bool:
    return len(connected_component(g, 0)) == g.n


def edge_boundary(g: FiniteGraph, a: VertexSubset) -> int:
    """Number of edges with exactly one endpoint in a."""
    members = a.members
    return sum(1 for u, v in g.edges if (u in members) != (v in members))


def dump_graph(g: FiniteGraph, coordinates: Sequence[Sequence[int]] | None = None) -> str:
    """
    Serializes a graph as plain text: "n m", then one "u v" line per edge,
    then, if given, one coordinate line per vertex.
    """
    lines = [f"{g.n} {g.m}"]
    lines.extend(f"{u} {v}" for u, v in g.edges)
    if coordinates is not None:
        if len(coordinates) != g.n:
            raise InvalidArgumentError(f"Expected {g.n} coordinate rows, got {len(coordinates)}")
        lines.extend(" ".join(str(int(c)) for c in row) for row in coordinates)
    return "\n".join(lines) + "\n"


def load_graph(text: str) -> Tuple[FiniteGraph, List[Tuple[int, ...]] | None]:
    """Parses the dump_graph format; returns the graph and the coordinates, if any."""
    rows = [line.split() for line in text.strip().splitlines() if line.strip()]
    if not rows or len(rows[0]) != 2:
        raise InvalidArgumentError("Graph dump must start with a line 'n m'")
    n, m = int(rows[0][0]), int(rows[0][1])
    if len(rows) < 1 + m:
        raise InvalidArgumentError(f"Graph dump announces {m} edges but has {len(rows) - 1} lines")
    graph = FiniteGraph.from_edges(n, ((int(u), int(v)) for u, v in rows[1:1 + m]))
    coordinate_rows = rows[1 + m:]
    if not coordinate_rows:
        return graph, None
    if len(coordinate_rows) != n:
        raise InvalidArgumentError(f"Graph dump has {len(coordinate_rows)} coordinate lines for {n} vertices")
    return graph, [tuple(int(c) for c in row) for row in coordinate_rows]
