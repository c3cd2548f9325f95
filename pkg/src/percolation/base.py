from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, Tuple

from errors import InvalidArgumentError
from graph_core import FiniteGraph

DEFAULT_SIZE_CAP = 20000


class Family(str, Enum):
    SQUARE_LATTICE_2D = "square_lattice_2d"
    HOMOGENEOUS_TREE = "homogeneous_tree"


@dataclass(frozen=True)
class PercolationModel:
    """
    Bernoulli bond percolation with parameter p on an infinite host graph.

    The host is Z^2 (delta fixed to 4) or the delta-regular tree. Clusters are
    explored from the origin and cut off at `size_cap` vertices.
    """

    family: Family
    delta: int
    p: float
    size_cap: int = DEFAULT_SIZE_CAP
    seed: int = 0

    def __post_init__(self) -> None:
        family = Family(self.family)
        object.__setattr__(self, "family", family)
        if not 0.0 <= self.p <= 1.0:
            raise InvalidArgumentError(f"p must lie in [0, 1], got {self.p}")
        if family is Family.SQUARE_LATTICE_2D and self.delta != 4:
            raise InvalidArgumentError(f"Z^2 is 4-regular; delta must be 4, got {self.delta}")
        if family is Family.HOMOGENEOUS_TREE and self.delta < 3:
            raise InvalidArgumentError(f"The homogeneous tree needs delta >= 3, got {self.delta}")
        if self.size_cap < 1:
            raise InvalidArgumentError(f"size_cap must be positive, got {self.size_cap}")

    @property
    def critical_p(self) -> float:
        if self.family is Family.SQUARE_LATTICE_2D:
            return 0.5
        return 1.0 / (self.delta - 1)

    @property
    def is_critical(self) -> bool:
        return abs(self.p - self.critical_p) < 1e-12

    @property
    def is_subcritical(self) -> bool:
        return self.p < self.critical_p - 1e-12

    @property
    def is_planar(self) -> bool:
        return self.family is Family.SQUARE_LATTICE_2D

    def with_overrides(self, **changes) -> "PercolationModel":
        return replace(self, **changes)


# Named parameter sets used by the CLI and the config files.
PRESETS: Dict[str, Dict[str, object]] = {
    "tree-critical": {"family": Family.HOMOGENEOUS_TREE, "delta": 3, "p": 0.5},
    "tree-subcritical": {"family": Family.HOMOGENEOUS_TREE, "delta": 3, "p": 0.3},
    "z2-critical": {"family": Family.SQUARE_LATTICE_2D, "delta": 4, "p": 0.5},
    "z2-subcritical": {"family": Family.SQUARE_LATTICE_2D, "delta": 4, "p": 0.3},
}


def preset(name: str, **overrides) -> PercolationModel:
    """Returns the named model, with any field replaced by `overrides`."""
    if name not in PRESETS:
        raise InvalidArgumentError(f"Unknown preset '{name}'; choose one of {', '.join(sorted(PRESETS))}")
    values = dict(PRESETS[name])
    values.update({key: value for key, value in overrides.items() if value is not None})
    return PercolationModel(**values)


@dataclass(frozen=True)
class ClusterSample:
    """The open cluster of the origin, relabeled so that the root has id 0."""

    graph: FiniteGraph
    root: int
    censored: bool
    coordinates: Tuple[Tuple[int, int], ...] | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.graph.n


class ClusterSampler(ABC):
    """Base contract for per-family cluster samplers."""

    name: str = "base"
    family: Family | None = None

    def supports(self, model: PercolationModel) -> bool:
        return model.family is self.family

    @abstractmethod
    def sample_cluster(self, model: PercolationModel, stream_index: int) -> ClusterSample:
        """Explore the origin's cluster using the stream_index-th substream of model.seed."""

    def sample_size(self, model: PercolationModel, stream_index: int) -> Tuple[int, bool]:
        """Return (size, censored) of the same cluster sample_cluster would build."""
        sample = self.sample_cluster(model, stream_index)
        return sample.size, sample.censored
