from __future__ import annotations

import logging
from typing import List, Tuple

import numpy as np

from graph_core import FiniteGraph
from percolation.base import ClusterSample, ClusterSampler, Family, PercolationModel
from utils import spawn_generator


class HomogeneousTreeSampler(ClusterSampler):
    """
    Origin cluster of bond percolation on the delta-regular tree.

    The cluster is a Galton-Watson tree: the root has Binomial(delta, p) open
    children and every other vertex Binomial(delta - 1, p). Generations are drawn
    in one vectorized call each, vertex ids are assigned generation by generation.
    """

    name = "tree"
    family = Family.HOMOGENEOUS_TREE

    def sample_cluster(self, model: PercolationModel, stream_index: int) -> ClusterSample:
        size, parent_links, censored = self._grow(model, stream_index, keep_links=True)
        if size == 1:
            graph = FiniteGraph.from_edges(1, ())
        else:
            children = np.arange(1, size)
            parents = np.concatenate(parent_links)
            graph = FiniteGraph.from_edges(size, zip(parents.tolist(), children.tolist()))
        return ClusterSample(graph=graph, root=0, censored=censored)

    def sample_size(self, model: PercolationModel, stream_index: int) -> Tuple[int, bool]:
        size, _, censored = self._grow(model, stream_index, keep_links=False)
        return size, censored

    def _grow(self, model: PercolationModel, stream_index: int, keep_links: bool) -> Tuple[int, List[np.ndarray], bool]:
        rng = spawn_generator(model.seed, stream_index)
        parent_links: List[np.ndarray] = []
        current = np.zeros(1, dtype=np.int64)
        size = 1
        censored = False
        branching = model.delta
        while current.size:
            counts = rng.binomial(branching, model.p, size=current.size)
            branching = model.delta - 1
            total = int(counts.sum())
            if total == 0:
                break
            if size + total > model.size_cap:
                room = model.size_cap - size
                before = np.cumsum(counts) - counts
                counts = np.clip(room - before, 0, counts)
                total = room
                censored = True
            if keep_links:
                parent_links.append(np.repeat(current, counts))
            current = np.arange(size, size + total, dtype=np.int64)
            size += total
            if censored:
                logging.debug(f"[{self.name}] stream {stream_index} censored at {model.size_cap} vertices")
                break
        return size, parent_links, censored
