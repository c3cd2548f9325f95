"""
Bond percolation on Z^2: breadth-first exploration of the origin's cluster with
lazily drawn edge states, plus full-box configurations for cluster counting
and density-of-states work.
"""
from __future__ import annotations

import logging
from collections import deque
from typing import Dict, List, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from errors import InvalidArgumentError
from graph_core import FiniteGraph
from percolation.base import ClusterSample, ClusterSampler, Family, PercolationModel
from utils import spawn_generator

Site = Tuple[int, int]
Edge = Tuple[int, int]

# East, north, west, south. The order fixes which uniforms go to which edge.
STEPS: Tuple[Site, ...] = ((1, 0), (0, 1), (-1, 0), (0, -1))
UNIFORM_BLOCK = 1024


class _UniformStream:
    """Uniforms from one generator, drawn in blocks but consumed one at a time."""

    def __init__(self, rng: np.random.Generator) -> None:
        self.rng = rng
        self.buffer = rng.random(UNIFORM_BLOCK)
        self.position = 0

    def next(self) -> float:
        if self.position == UNIFORM_BLOCK:
            self.buffer = self.rng.random(UNIFORM_BLOCK)
            self.position = 0
        value = self.buffer[self.position]
        self.position += 1
        return float(value)


class SquareLatticeSampler(ClusterSampler):
    name = "z2"
    family = Family.SQUARE_LATTICE_2D

    def sample_cluster(self, model: PercolationModel, stream_index: int) -> ClusterSample:
        index, edges, censored = self._explore(model, stream_index)
        coordinates = tuple(index.keys())
        graph = FiniteGraph.from_edges(len(index), edges)
        return ClusterSample(graph=graph, root=0, censored=censored, coordinates=coordinates)

    def sample_size(self, model: PercolationModel, stream_index: int) -> Tuple[int, bool]:
        index, _, censored = self._explore(model, stream_index)
        return len(index), censored

    def _explore(self, model: PercolationModel, stream_index: int) -> Tuple[Dict[Site, int], List[Edge], bool]:
        """
        Breadth-first search from the origin.

        Each lattice edge gets its state the first time the search looks at it and
        keeps it from then on. The search stops when the frontier is empty or when
        a new vertex would exceed size_cap (the sample is then censored).
        """
        uniforms = _UniformStream(spawn_generator(model.seed, stream_index))
        index: Dict[Site, int] = {(0, 0): 0}
        edge_states: Dict[Tuple[Site, Site], bool] = {}
        edges: List[Edge] = []
        frontier = deque([(0, 0)])
        censored = False
        while frontier and not censored:
            site = frontier.popleft()
            for dx, dy in STEPS:
                neighbor = (site[0] + dx, site[1] + dy)
                key = (site, neighbor) if site < neighbor else (neighbor, site)
                if key in edge_states:
                    continue
                is_open = uniforms.next() < model.p
                edge_states[key] = is_open
                if not is_open:
                    continue
                if neighbor not in index:
                    if len(index) >= model.size_cap:
                        censored = True
                        break
                    index[neighbor] = len(index)
                    frontier.append(neighbor)
                edges.append((index[site], index[neighbor]))
        if censored:
            logging.debug(f"[{self.name}] stream {stream_index} censored at {model.size_cap} vertices")
        return index, edges, censored


def box_configuration(p: float, L: int, seed: int, index: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Draws every bond of the box {-L+1, ..., L}^2.

    Args:
        p (float): bond density.
        L (int): half side; the box has side 2L.
        seed (int): campaign seed.
        index (int): realization number, the substream of seed.

    Returns:
        (horizontal, vertical): boolean arrays of shape (2L, 2L-1) and (2L-1, 2L).
        horizontal[r, c] is the bond between columns c and c+1 of row r.
    """
    if L < 1:
        raise InvalidArgumentError(f"Box half side must be positive, got L={L}")
    if not 0.0 <= p <= 1.0:
        raise InvalidArgumentError(f"p must lie in [0, 1], got {p}")
    side = 2 * L
    rng = spawn_generator(seed, index)
    horizontal = rng.random((side, side - 1)) < p
    vertical = rng.random((side - 1, side)) < p
    return horizontal, vertical


def box_edges(horizontal: np.ndarray, vertical: np.ndarray) -> np.ndarray:
    """Open bonds of a box configuration as an (m, 2) array; site (r, c) has id r*side + c."""
    side = horizontal.shape[0]
    ids = np.arange(side * side).reshape(side, side)
    rows, cols = np.nonzero(horizontal)
    east = np.column_stack([ids[rows, cols], ids[rows, cols + 1]])
    rows, cols = np.nonzero(vertical)
    north = np.column_stack([ids[rows, cols], ids[rows + 1, cols]])
    return np.concatenate([east, north]).astype(np.int64)


def box_components(horizontal: np.ndarray, vertical: np.ndarray) -> Tuple[int, np.ndarray]:
    """Open clusters of a box configuration: (number of clusters, cluster label of every site)."""
    side = horizontal.shape[0]
    n = side * side
    edges = box_edges(horizontal, vertical)
    adjacency = sparse.csr_matrix(
        (np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(n, n)
    )
    n_components, labels = connected_components(adjacency, directed=False)
    return int(n_components), labels
