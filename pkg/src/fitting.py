"""
Power-law fits in log-log coordinates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy import stats

from errors import InsufficientDataError, InvalidArgumentError

MIN_FIT_POINTS = 3


@dataclass(frozen=True)
class PowerLawFit:
    """
    y ~ exp(intercept) * x**slope over `window`.

    `slope` keeps its sign; decay exponents are reported as -slope by callers.
    """

    slope: float
    intercept: float
    stderr: float
    r_squared: float
    n_points: int
    window: Tuple[float, float]

    def predict(self, x: np.ndarray | float) -> np.ndarray | float:
        return np.exp(self.intercept) * np.power(x, self.slope)


def _log_points(x: Sequence[float], y: Sequence[float]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    xs = np.asarray(x, dtype=np.float64)
    ys = np.asarray(y, dtype=np.float64)
    if xs.shape != ys.shape:
        raise InvalidArgumentError(f"x and y differ in shape: {xs.shape} vs {ys.shape}")
    keep = (xs > 0) & (ys > 0) & np.isfinite(xs) & np.isfinite(ys)
    return np.log(xs[keep]), np.log(ys[keep]), keep


def fit_power_law(x: Sequence[float], y: Sequence[float]) -> PowerLawFit:
    """
    Ordinary least squares of log y on log x (scipy.stats.linregress).

    Non-positive points are dropped.

    Raises:
        InsufficientDataError: with fewer than three usable points.
    """
    log_x, log_y, _ = _log_points(x, y)
    if log_x.size < MIN_FIT_POINTS:
        raise InsufficientDataError(f"A power-law fit needs {MIN_FIT_POINTS} positive points, got {log_x.size}")
    if np.ptp(log_x) == 0.0:
        raise InsufficientDataError("All fit abscissae coincide")
    result = stats.linregress(log_x, log_y)
    return PowerLawFit(
        slope=float(result.slope),
        intercept=float(result.intercept),
        stderr=float(result.stderr),
        r_squared=float(result.rvalue ** 2),
        n_points=int(log_x.size),
        window=(float(np.exp(log_x.min())), float(np.exp(log_x.max()))),
    )


def fit_power_law_weighted(x: Sequence[float], y: Sequence[float], sigma_log: Sequence[float]) -> PowerLawFit:
    """
    Weighted least squares of log y on log x.

    Args:
        x, y: the points; non-positive ones are dropped.
        sigma_log: standard errors of log y (relative errors of y), one per point.

    Returns:
        PowerLawFit with the weighted R^2 and the parameter standard error
        rescaled by the residual variance.
    """
    sigmas = np.asarray(sigma_log, dtype=np.float64)
    log_x, log_y, keep = _log_points(x, y)
    if sigmas.shape != keep.shape:
        raise InvalidArgumentError("sigma_log must have one entry per point")
    sigmas = np.maximum(sigmas[keep], 1e-12)
    if log_x.size < MIN_FIT_POINTS:
        raise InsufficientDataError(f"A power-law fit needs {MIN_FIT_POINTS} positive points, got {log_x.size}")
    if np.ptp(log_x) == 0.0:
        raise InsufficientDataError("All fit abscissae coincide")
    weights = 1.0 / sigmas
    design = np.column_stack([np.ones_like(log_x), log_x]) * weights[:, np.newaxis]
    target = log_y * weights
    coefficients, _, _, _ = np.linalg.lstsq(design, target, rcond=None)
    intercept, slope = float(coefficients[0]), float(coefficients[1])

    residuals = target - design @ coefficients
    dof = max(log_x.size - 2, 1)
    scale = float(residuals @ residuals) / dof
    covariance = np.linalg.inv(design.T @ design) * scale
    stderr = math.sqrt(max(float(covariance[1, 1]), 0.0))

    w2 = weights ** 2
    mean_y = float(np.sum(w2 * log_y) / np.sum(w2))
    total = float(np.sum(w2 * (log_y - mean_y) ** 2))
    r_squared = 1.0 - float(residuals @ residuals) / total if total > 0 else 1.0
    return PowerLawFit(
        slope=slope,
        intercept=intercept,
        stderr=stderr,
        r_squared=r_squared,
        n_points=int(log_x.size),
        window=(float(np.exp(log_x.min())), float(np.exp(log_x.max()))),
    )


def window_mask(x: np.ndarray, window: Tuple[float, float] | None) -> np.ndarray:
    """Boolean mask of the points of x inside the closed window (all points if None)."""
    if window is None:
        return np.ones(np.shape(x), dtype=bool)
    low, high = window
    if low <= 0 or high < low:
        raise InvalidArgumentError(f"Bad fit window [{low}, {high}]")
    return (x >= low) & (x <= high)
