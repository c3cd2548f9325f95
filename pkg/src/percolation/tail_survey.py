"""
Empirical cluster-size survival function Phi(m) = P[|C_o| >= m] with Wilson
confidence intervals and a log-log slope over a window of thresholds.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy import stats

from bounds import BoundId, BoundReport, TailParams
from campaign_manager import CampaignOrchestrator
from errors import InsufficientDataError, InvalidArgumentError
from fitting import PowerLawFit, fit_power_law, window_mask
from percolation.base import ClusterSampler, Family, PercolationModel

CONFIDENCE = 0.95
POOR_FIT_R_SQUARED = 0.98
SLOPE_TOLERANCE = 0.1
TAIL_COLUMNS = ["m", "phi_hat", "ci_low", "ci_high"]

# P[|C_o| >= m] ~ m^-exponent at criticality.
CRITICAL_TAIL_EXPONENTS = {
    Family.HOMOGENEOUS_TREE: 0.5,
    Family.SQUARE_LATTICE_2D: 5.0 / 91.0,
}


@dataclass(frozen=True)
class TailEstimate:
    m_grid: np.ndarray
    phi_hat: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    slope: float
    stderr: float
    r_squared: float
    window: Tuple[float, float]
    n_samples: int
    censored_fraction: float

    @property
    def poor_fit(self) -> bool:
        """True when a single power law does not describe the windowed tail."""
        return self.r_squared < POOR_FIT_R_SQUARED

    def rows(self) -> List[List[float]]:
        return [
            [int(m), float(phi), float(low), float(high)]
            for m, phi, low, high in zip(self.m_grid, self.phi_hat, self.ci_low, self.ci_high)
        ]

    def tail_params(self) -> TailParams:
        """
        Tail constants A m^-a <= Phi(m) <= B m^-b read off the confidence band.

        Both exponents are the fitted slope; A and B are the tightest constants
        for which the band's lower and upper edges satisfy the two inequalities
        on the fit window.
        """
        if not 0.0 < self.slope < 1.0:
            raise InsufficientDataError(f"Fitted tail slope {self.slope:.3f} is outside (0, 1)")
        mask = window_mask(self.m_grid, self.window) & (self.ci_low > 0)
        if not mask.any():
            raise InsufficientDataError("No positive lower confidence bound inside the fit window")
        m = self.m_grid[mask].astype(np.float64)
        lower = float(np.min(self.ci_low[mask] * m ** self.slope))
        upper = float(np.max(self.ci_high[mask] * m ** self.slope))
        return TailParams(A=lower, B=upper, a=self.slope, b=self.slope)


def wilson_interval(successes: np.ndarray, n: int, confidence: float = CONFIDENCE) -> Tuple[np.ndarray, np.ndarray]:
    """Wilson score interval for binomial proportions."""
    z = float(stats.norm.ppf(0.5 + confidence / 2.0))
    phat = successes / n
    denominator = 1.0 + z ** 2 / n
    centre = (phat + z ** 2 / (2 * n)) / denominator
    half = z * np.sqrt(phat * (1.0 - phat) / n + z ** 2 / (4 * n ** 2)) / denominator
    return np.clip(centre - half, 0.0, 1.0), np.clip(centre + half, 0.0, 1.0)


def survival_from_sizes(sizes: np.ndarray, censored: np.ndarray, m_grid: Sequence[int]) -> np.ndarray:
    """Fraction of samples with size >= m; a censored sample counts as >= every m."""
    thresholds = np.asarray(m_grid, dtype=np.int64)
    ordered = np.sort(np.asarray(sizes, dtype=np.int64)[~np.asarray(censored, dtype=bool)])
    n = len(sizes)
    below = np.searchsorted(ordered, thresholds, side="left")
    return (n - below) / n


def tail_from_sizes(
    sizes: np.ndarray,
    censored: np.ndarray,
    m_grid: Sequence[int],
    window: Tuple[float, float] | None = None
) -> TailEstimate:
    """Builds a TailEstimate from already sampled cluster sizes."""
    thresholds = np.asarray(sorted(set(int(m) for m in m_grid)), dtype=np.int64)
    if thresholds.size == 0 or thresholds[0] < 1:
        raise InvalidArgumentError("m_grid must contain positive thresholds")
    n = len(sizes)
    if n < 1:
        raise InvalidArgumentError("A tail estimate needs at least one sample")
    if window is None:
        window = (float(thresholds[0]), float(thresholds[-1]))
    if window[0] < thresholds[0] or window[1] > thresholds[-1] or window[1] < window[0]:
        raise InvalidArgumentError(
            f"Fit window [{window[0]}, {window[1]}] is outside the thresholds [{thresholds[0]}, {thresholds[-1]}]"
        )
    phi = survival_from_sizes(sizes, censored, thresholds)
    low, high = wilson_interval(phi * n, n)
    mask = window_mask(thresholds, window)
    fit: PowerLawFit | None
    try:
        fit = fit_power_law(thresholds[mask], phi[mask])
    except InsufficientDataError as exc:
        logging.warning(f"[tail] {exc}")
        fit = None
    return TailEstimate(
        m_grid=thresholds,
        phi_hat=phi,
        ci_low=low,
        ci_high=high,
        slope=-fit.slope if fit else float("nan"),
        stderr=fit.stderr if fit else float("nan"),
        r_squared=fit.r_squared if fit else 0.0,
        window=(float(window[0]), float(window[1])),
        n_samples=n,
        censored_fraction=float(np.mean(censored)),
    )


def sample_sizes(
    sampler: ClusterSampler,
    model: PercolationModel,
    n_samples: int,
    orchestrator: CampaignOrchestrator | None = None
) -> Tuple[np.ndarray, np.ndarray]:
    """Cluster sizes and censoring flags of streams 0..n_samples-1."""
    orchestrator = orchestrator or CampaignOrchestrator()

    def run_chunk(indices: range) -> Tuple[np.ndarray, np.ndarray]:
        pairs = [sampler.sample_size(model, i) for i in indices]
        return (
            np.fromiter((size for size, _ in pairs), dtype=np.int64, count=len(pairs)),
            np.fromiter((flag for _, flag in pairs), dtype=bool, count=len(pairs)),
        )

    chunks = orchestrator.run(n_samples, run_chunk, label=f"{sampler.name}-sizes")
    sizes = np.concatenate([chunk[0] for chunk in chunks])
    censored = np.concatenate([chunk[1] for chunk in chunks])
    return sizes, censored


def default_m_grid(m_min: int = 1, m_max: int = 1000, points: int = 31) -> np.ndarray:
    return np.unique(np.round(np.geomspace(m_min, m_max, points)).astype(np.int64))


def tail_slope_reports(
    estimate: TailEstimate,
    model: PercolationModel,
    tolerance: float = SLOPE_TOLERANCE
) -> List[BoundReport]:
    """
    Fitted slope of a critical model within tolerance of the known tail exponent.

    Off criticality there is no exponent to compare with and nothing is reported.
    """
    if not model.is_critical:
        return []
    expected = CRITICAL_TAIL_EXPONENTS[model.family]
    inputs = {"family": model.family.value, "p": model.p, "expected": expected,
              "window": f"{estimate.window[0]:g}-{estimate.window[1]:g}", "n_samples": estimate.n_samples}
    note = f"poor fit, r^2 {estimate.r_squared:.4f}" if estimate.poor_fit else ""
    return [
        BoundReport.make(BoundId.TAIL_SLOPE, dict(inputs, side="lower"), estimate.slope, expected - tolerance,
                         sense="ge", slack=0.0, note=note),
        BoundReport.make(BoundId.TAIL_SLOPE, dict(inputs, side="upper"), estimate.slope, expected + tolerance,
                         slack=0.0, note=note),
    ]
