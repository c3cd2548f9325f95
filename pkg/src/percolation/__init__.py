"""
Percolation package exporting the cluster samplers and the tail survey.
"""
from __future__ import annotations

import logging
from typing import List, Sequence, Tuple

from campaign_manager import CampaignOrchestrator
from errors import FamilyMismatchError, InvalidArgumentError

from .base import (  # noqa: F401
    DEFAULT_SIZE_CAP,
    PRESETS,
    ClusterSample,
    ClusterSampler,
    Family,
    PercolationModel,
    preset,
)
from .homogeneous_tree import HomogeneousTreeSampler  # noqa: F401
from .square_lattice import SquareLatticeSampler, box_components, box_configuration, box_edges  # noqa: F401
from .tail_survey import (  # noqa: F401
    CRITICAL_TAIL_EXPONENTS,
    TAIL_COLUMNS,
    TailEstimate,
    default_m_grid,
    sample_sizes,
    tail_from_sizes,
    tail_slope_reports,
)

SAMPLERS: List[ClusterSampler] = [SquareLatticeSampler(), HomogeneousTreeSampler()]


def sampler_for(model: PercolationModel) -> ClusterSampler:
    for sampler in SAMPLERS:
        if sampler.supports(model):
            return sampler
    raise FamilyMismatchError(f"No sampler registered for family {model.family}")


def sample_cluster(model: PercolationModel, stream_index: int) -> ClusterSample:
    """Origin cluster of the stream_index-th configuration of the model."""
    return sampler_for(model).sample_cluster(model, stream_index)


def tail_survey(
    model: PercolationModel,
    n_samples: int,
    m_grid: Sequence[int],
    window: Tuple[float, float] | None = None,
    workers: int = 4
) -> TailEstimate:
    """
    Samples n_samples cluster sizes and returns the survival function on m_grid
    with its log-log slope over `window`.
    """
    if n_samples < 1:
        raise InvalidArgumentError(f"n_samples must be at least 1, got {n_samples}")
    sampler = sampler_for(model)
    sizes, censored = sample_sizes(sampler, model, n_samples, CampaignOrchestrator(workers=workers))
    estimate = tail_from_sizes(sizes, censored, m_grid, window)
    logging.info(
        f"[tail] {model.family.value} p={model.p}: slope {estimate.slope:.4f} +/- {estimate.stderr:.4f}, "
        f"r^2 {estimate.r_squared:.4f}, censored {estimate.censored_fraction:.2%}"
    )
    if estimate.poor_fit:
        logging.warning(f"[tail] poor power-law fit (r^2 {estimate.r_squared:.4f}) for p={model.p}")
    return estimate


__all__ = [
    "DEFAULT_SIZE_CAP",
    "PRESETS",
    "ClusterSample",
    "ClusterSampler",
    "Family",
    "HomogeneousTreeSampler",
    "PercolationModel",
    "SquareLatticeSampler",
    "CRITICAL_TAIL_EXPONENTS",
    "TAIL_COLUMNS",
    "TailEstimate",
    "box_components",
    "box_configuration",
    "box_edges",
    "default_m_grid",
    "preset",
    "sample_cluster",
    "sampler_for",
    "tail_from_sizes",
    "tail_slope_reports",
    "tail_survey",
]
