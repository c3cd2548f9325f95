"""
Integrated density of states of the percolation walk operator I - P on finite
Z^2 boxes with free boundary, its Laplace transform, and the small-energy
window check.
"""
from __future__ import annotations

import logging
import logging_config  # noqa: F401
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from annealed import AnnealedEstimate
from bounds import BoundId, BoundReport
from campaign_manager import CampaignOrchestrator
from errors import (
    InsufficientDataError,
    InvalidArgumentError,
    PreconditionViolatedError,
    SizeExceededError,
)
from fitting import fit_power_law
from graph_core import FiniteGraph
from percolation import Family, box_components, box_configuration, box_edges
from spectral import DEFAULT_DENSE_CAP, drw_kernel, exact_spectrum, lanczos_quadrature
from utils import derive_seed

BOX_DELTA = 4
ZERO_TOLERANCE = 1e-9
MAX_CURVE_ROWS = 20000
IDS_COLUMNS = ["E", "N_of_E"]


@dataclass(frozen=True)
class IdsCurve:
    """
    Pooled eigenvalues of I - P over n_realizations boxes of side 2L.

    `weights` is 1 for every exactly computed eigenvalue; quadrature nodes from
    the sparse path carry fractional weights. N(E) is the weight at or below E
    divided by the number of sites of all realizations.
    """

    energies: np.ndarray
    weights: np.ndarray
    p: float
    L: int
    n_realizations: int
    zero_mode_counts: Tuple[int, ...] = field(default=(), repr=False)
    component_counts: Tuple[int, ...] = field(default=(), repr=False)

    @property
    def sites(self) -> int:
        return (2 * self.L) ** 2

    @property
    def total_sites(self) -> int:
        return self.sites * self.n_realizations

    @property
    def counts(self) -> np.ndarray:
        """N(E) at every stored energy."""
        return np.cumsum(self.weights) / self.total_sites

    def n_of(self, energy: float | np.ndarray) -> float | np.ndarray:
        cumulative = np.concatenate([[0.0], self.counts])
        positions = np.searchsorted(self.energies, energy, side="right")
        return cumulative[positions]

    @property
    def n_at_zero(self) -> float:
        return float(self.n_of(ZERO_TOLERANCE))

    @property
    def zero_modes_match(self) -> bool:
        """Eigenvalue-0 multiplicity equals the cluster count in every realization."""
        return self.zero_mode_counts == self.component_counts

    def laplace(self, t: float) -> float:
        """Integral of exp(-tE) dN(E) as a finite eigenvalue sum."""
        return float(np.sum(self.weights * np.exp(-t * self.energies)) / self.total_sites)

    def rows(self, max_rows: int = MAX_CURVE_ROWS) -> List[List[float]]:
        """(E, N(E)) at the distinct stored energies, thinned to max_rows by quantiles."""
        distinct = np.unique(self.energies)
        if distinct.size > max_rows:
            distinct = np.unique(np.quantile(self.energies, np.linspace(0.0, 1.0, max_rows), method="inverted_cdf"))
        return [[float(e), float(n)] for e, n in zip(distinct, self.n_of(distinct))]


def _component_spectrum(
    vertices: np.ndarray,
    local_edges: np.ndarray,
    dense_cap: int,
    sparse_path: bool,
    slq_probes: int,
    slq_steps: int,
    seed: int
) -> Tuple[np.ndarray, np.ndarray, int]:
    """Energies, weights and the number of exact zero modes of one open cluster."""
    size = vertices.size
    if size == 1:
        return np.zeros(1), np.ones(1), 1
    if size == 2:
        return np.array([0.0, 2.0 / BOX_DELTA]), np.ones(2), 1
    kernel = drw_kernel(FiniteGraph.from_edges(size, local_edges), BOX_DELTA)
    if size <= dense_cap:
        energies = np.clip(1.0 - exact_spectrum(kernel, dense_cap).betas, 0.0, 2.0)
        return energies, np.ones(size), int(np.sum(energies <= ZERO_TOLERANCE))
    if not sparse_path:
        raise SizeExceededError(
            f"Open cluster of {size} sites exceeds the dense cap {dense_cap}; enable the sparse path"
        )
    nodes, weights = lanczos_quadrature(kernel, slq_probes, slq_steps, seed=seed)
    return np.clip(1.0 - nodes, 0.0, 2.0), weights, 1


def realization_spectrum(
    p: float,
    L: int,
    seed: int,
    index: int,
    dense_cap: int = DEFAULT_DENSE_CAP,
    sparse_path: bool = False,
    slq_probes: int = 20,
    slq_steps: int = 80
) -> Tuple[np.ndarray, np.ndarray, int, int]:
    """
    Spectrum of I - P on one box configuration, cluster by cluster.

    Returns:
        (energies, weights, zero modes, number of clusters).
    """
    horizontal, vertical = box_configuration(p, L, seed, index)
    n_components, labels = box_components(horizontal, vertical)
    edges = box_edges(horizontal, vertical)

    vertex_order = np.argsort(labels, kind="stable")
    vertex_splits = np.cumsum(np.bincount(labels, minlength=n_components))[:-1]
    edge_labels = labels[edges[:, 0]]
    edge_order = np.argsort(edge_labels, kind="stable")
    edge_splits = np.cumsum(np.bincount(edge_labels, minlength=n_components))[:-1]
    component_vertices = np.split(vertex_order, vertex_splits)
    component_edges = np.split(edges[edge_order], edge_splits)

    energies: List[np.ndarray] = []
    weights: List[np.ndarray] = []
    zero_modes = 0
    for component, (vertices, cluster_edges) in enumerate(zip(component_vertices, component_edges)):
        local_edges = np.searchsorted(vertices, cluster_edges)
        e, w, zeros = _component_spectrum(
            vertices, local_edges, dense_cap, sparse_path, slq_probes, slq_steps,
            derive_seed(seed, index, component),
        )
        energies.append(e)
        weights.append(w)
        zero_modes += zeros
    return np.concatenate(energies), np.concatenate(weights), zero_modes, n_components


def ids_curve(
    p: float,
    L: int,
    n_realizations: int,
    seed: int = 0,
    dense_cap: int = DEFAULT_DENSE_CAP,
    sparse_path: bool = False,
    workers: int = 4
) -> IdsCurve:
    """
    Empirical integrated density of states of I - P (delay 4) on the box {-L+1..L}^2.

    Args:
        p (float): bond density.
        L (int): half side of the box.
        n_realizations (int): box configurations averaged, substreams 0..n-1 of seed.
        dense_cap (int): largest open cluster diagonalized densely.
        sparse_path (bool): use stochastic Lanczos quadrature above dense_cap instead of failing.

    Raises:
        SizeExceededError: a cluster above dense_cap without the sparse path.
    """
    if L < 1:
        raise InvalidArgumentError(f"Box half side must be positive, got L={L}")
    if n_realizations < 1:
        raise InvalidArgumentError(f"n_realizations must be at least 1, got {n_realizations}")

    def run_chunk(indices: range) -> List[Tuple[np.ndarray, np.ndarray, int, int]]:
        return [realization_spectrum(p, L, seed, index, dense_cap, sparse_path) for index in indices]

    chunks = CampaignOrchestrator(workers=workers, chunk_size=2).run(n_realizations, run_chunk, label="ids")
    results = [result for chunk in chunks for result in chunk]
    energies = np.concatenate([result[0] for result in results])
    weights = np.concatenate([result[1] for result in results])
    order = np.argsort(energies, kind="stable")
    curve = IdsCurve(
        energies=energies[order],
        weights=weights[order],
        p=float(p),
        L=int(L),
        n_realizations=int(n_realizations),
        zero_mode_counts=tuple(result[2] for result in results),
        component_counts=tuple(result[3] for result in results),
    )
    logging.info(f"[ids] p={p} L={L}: {n_realizations} realizations, N(0) = {curve.n_at_zero:.6f}")
    if not curve.zero_modes_match:
        logging.error("[ids] zero-mode multiplicities differ from the cluster counts")
    return curve


def laplace_consistency(curve: IdsCurve, est: AnnealedEstimate) -> List[BoundReport]:
    """
    Laplace transform of the curve against the fixed-root annealed estimate.

    Each grid t passes when the deviation is at most 5% of the estimate plus four
    of its standard errors; every report carries the maximum relative deviation
    over the grid.
    """
    if est.model.family is not Family.SQUARE_LATTICE_2D or abs(est.model.p - curve.p) > 1e-12:
        raise InvalidArgumentError(
            f"Curve at p={curve.p} cannot be compared with a {est.model.family.value} campaign at p={est.model.p}"
        )
    if not est.fixed_root:
        raise InvalidArgumentError("The Laplace check needs a fixed-root campaign")
    transforms = np.array([curve.laplace(t) for t in est.t_grid])
    deviations = np.abs(transforms - est.p_t_root_hat)
    max_relative = float(np.max(deviations / np.maximum(est.p_t_root_hat, 1e-300)))
    reports = []
    for i, t in enumerate(est.t_grid):
        reports.append(BoundReport.make(
            BoundId.LAPLACE_CONSISTENCY,
            {"p": curve.p, "L": curve.L, "t": float(t), "max_relative_deviation": max_relative},
            lhs=deviations[i],
            rhs=0.05 * est.p_t_root_hat[i] + 4.0 * est.root_std_error[i],
            slack=0.0,
        ))
    return reports


def theorem2_bracket(alpha: float, log_allowance: float = 0.1) -> Tuple[float, float]:
    if not 0.0 < alpha < 0.2:
        raise InvalidArgumentError(f"alpha must lie in (0, 1/5), got {alpha}")
    return (1.0 + alpha) / 2.0 - 0.2, (1.0 + 1.0 / alpha) * (1.0 + log_allowance)


def theorem2_window_check(
    curve: IdsCurve,
    alpha: float,
    window: Sequence[float] = (1e-3, 1e-1),
    min_eigenvalues: int = 200,
    log_allowance: float = 0.1,
    require_critical: bool = True
) -> List[BoundReport]:
    """
    Local log-log slope of N(E) - N(0) on an energy window, against the bracket
    [(1+alpha)/2 - 0.2, (1+1/alpha)(1+log_allowance)].

    Raises:
        PreconditionViolatedError: curve not at p = 1/2 (unless require_critical is off).
        InsufficientDataError: fewer than min_eigenvalues pooled eigenvalues in the window.
    """
    low, high = theorem2_bracket(alpha, log_allowance)
    if require_critical and abs(curve.p - 0.5) > 1e-12:
        raise PreconditionViolatedError(f"The window check is stated at p = 1/2, got p={curve.p}")
    e_low, e_high = float(window[0]), float(window[1])
    mask = (curve.energies >= e_low) & (curve.energies <= e_high) & (curve.energies > ZERO_TOLERANCE)
    pooled = float(curve.weights[mask].sum())
    if pooled < min_eigenvalues:
        raise InsufficientDataError(
            f"Only {pooled:.0f} eigenvalues in [{e_low:g}, {e_high:g}], at least {min_eigenvalues} needed"
        )
    energies = np.unique(curve.energies[mask])
    fit = fit_power_law(energies, curve.n_of(energies) - curve.n_at_zero)
    logging.info(f"[ids] window slope {fit.slope:.4f} +/- {fit.stderr:.4f} over [{e_low:g}, {e_high:g}]")
    inputs = {"p": curve.p, "L": curve.L, "alpha": alpha, "window": f"{e_low:g}-{e_high:g}",
              "eigenvalues": int(pooled), "stderr": fit.stderr}
    return [
        BoundReport.make(BoundId.THM2_WINDOW, dict(inputs, side="lower"), fit.slope, low, sense="ge", slack=0.0),
        BoundReport.make(BoundId.THM2_WINDOW, dict(inputs, side="upper"), fit.slope, high, slack=0.0),
    ]
