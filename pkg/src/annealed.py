"""
Annealed (configuration-averaged) return probabilities of the delayed random
walk on percolation clusters, and the checks built on them: the Theorem 3
power-law sandwich, the critical decay-exponent bracket, the clusters-per-site
sandwich and the mass-transport identity.

Every cluster is walked with the ambient delay (4 on Z^2, delta on the tree),
not with its own maximum degree.
"""
from __future__ import annotations

import logging
import logging_config  # noqa: F401
import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from bounds import BoundId, BoundReport, TailParams, boshier_constant
from campaign_manager import CampaignOrchestrator
from errors import (
    FamilyMismatchError,
    FitUnreliableError,
    InsufficientDataError,
    InvalidArgumentError,
)
from fitting import fit_power_law_weighted, window_mask
from percolation import ClusterSample, Family, PercolationModel, box_components, box_configuration, sampler_for
from spectral import (
    DEFAULT_DENSE_CAP,
    DrwKernel,
    drw_kernel,
    exact_heat_trace,
    exact_spectrum,
    return_probabilities,
    root_return_chebyshev,
    root_return_probability,
    stochastic_heat_traces,
)
from utils import derive_seed

DEFAULT_PROBES = 64
ENVELOPE_THRESHOLD = 1e-3
FIT_SIGNIFICANCE = 5.0
MIN_R_SQUARED = 0.9
THEOREM3_LOWER_T_MIN = math.sqrt(288.0)
VACUOUS_BOUND = 1e-12
EXACT_TRACE_SLACK = 1e-12
CAMPAIGN_COLUMNS = [
    "t", "p_t_hat", "std_error", "kappa_hat", "censored_fraction",
    "p_t_upper", "gap_hat", "gap_std_error", "p_t_root_hat", "root_std_error",
]


@dataclass(frozen=True)
class AnnealedEstimate:
    """
    Sample means over the origin clusters of streams 0..n_samples-1.

    Censored clusters contribute 0 to the trace and kappa sums; `p_t_upper` adds
    the censored fraction back as the worst case.
    """

    model: PercolationModel
    t_grid: np.ndarray
    n_samples: int
    p_t_hat: np.ndarray
    std_error: np.ndarray
    gap_hat: np.ndarray
    gap_std_error: np.ndarray
    kappa_hat: float
    kappa_std_error: float
    chi_hat: float
    chi_std_error: float
    censored_fraction: float
    sizes: np.ndarray = field(repr=False)
    censored: np.ndarray = field(repr=False)
    p_t_root_hat: np.ndarray | None = None
    root_std_error: np.ndarray | None = None
    difference_std_error: np.ndarray | None = None

    @property
    def fixed_root(self) -> bool:
        return self.p_t_root_hat is not None

    @property
    def chi_reliable(self) -> bool:
        return self.censored_fraction == 0.0

    @property
    def use_envelope(self) -> bool:
        return self.censored_fraction > ENVELOPE_THRESHOLD

    @property
    def p_t_upper(self) -> np.ndarray:
        return np.minimum(self.p_t_hat + self.censored_fraction, 1.0)

    def size_moment(self, alpha: float) -> float:
        """Empirical E[|C_o|^alpha]; a censored cluster counts with size_cap, its known lower bound."""
        sizes = np.where(self.censored, self.model.size_cap, self.sizes).astype(np.float64)
        return float(np.mean(sizes ** alpha))

    def rows(self) -> List[List[float]]:
        rows = []
        for i, t in enumerate(self.t_grid):
            root = self.p_t_root_hat[i] if self.fixed_root else float("nan")
            root_se = self.root_std_error[i] if self.fixed_root else float("nan")
            rows.append([
                float(t), float(self.p_t_hat[i]), float(self.std_error[i]), self.kappa_hat,
                self.censored_fraction, float(self.p_t_upper[i]), float(self.gap_hat[i]),
                float(self.gap_std_error[i]), float(root), float(root_se),
            ])
        return rows


@dataclass(frozen=True)
class ExponentFit:
    """Fitted nu in P_t - kappa ~ c t^-nu."""

    exponent: float
    window: Tuple[float, float]
    stderr: float
    r_squared: float
    n_points: int


@dataclass
class _ChunkSums:
    """Per-chunk sums of the per-sample quantities and their squares."""

    trace: np.ndarray
    trace_sq: np.ndarray
    gap: np.ndarray
    gap_sq: np.ndarray
    root: np.ndarray
    root_sq: np.ndarray
    difference: np.ndarray
    difference_sq: np.ndarray
    inverse: float = 0.0
    inverse_sq: float = 0.0
    size: float = 0.0
    size_sq: float = 0.0
    sizes: List[int] = field(default_factory=list)
    censored: List[bool] = field(default_factory=list)

    @classmethod
    def zeros(cls, points: int) -> "_ChunkSums":
        return cls(*(np.zeros(points) for _ in range(8)))

    def add(self, size: int, censored: bool, trace: np.ndarray, root: np.ndarray, size_cap: int) -> None:
        inverse = 0.0 if censored else 1.0 / size
        gap = trace - inverse
        self.trace += trace
        self.trace_sq += trace ** 2
        self.gap += gap
        self.gap_sq += gap ** 2
        self.root += root
        self.root_sq += root ** 2
        self.difference += trace - root
        self.difference_sq += (trace - root) ** 2
        self.inverse += inverse
        self.inverse_sq += inverse ** 2
        counted = size_cap if censored else size
        self.size += counted
        self.size_sq += counted ** 2
        self.sizes.append(size)
        self.censored.append(censored)

    def merge(self, other: "_ChunkSums") -> None:
        for name in ("trace", "trace_sq", "gap", "gap_sq", "root", "root_sq", "difference", "difference_sq"):
            setattr(self, name, getattr(self, name) + getattr(other, name))
        self.inverse += other.inverse
        self.inverse_sq += other.inverse_sq
        self.size += other.size
        self.size_sq += other.size_sq
        self.sizes.extend(other.sizes)
        self.censored.extend(other.censored)


def _mean_and_error(total, total_sq, n: int):
    mean = total / n
    if n < 2:
        return mean, np.zeros_like(mean) if isinstance(mean, np.ndarray) else 0.0
    variance = np.maximum((total_sq - total ** 2 / n) / (n - 1), 0.0)
    return mean, np.sqrt(variance / n)


def cluster_traces(
    sample: ClusterSample,
    model: PercolationModel,
    t_grid: np.ndarray,
    stream_index: int,
    dense_cap: int = DEFAULT_DENSE_CAP,
    probes: int = DEFAULT_PROBES,
    fixed_root: bool = False
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Uniform-start and fixed-root return probabilities of one cluster on the t-grid.

    Returns zeros for a censored cluster, closed forms for one and two vertices,
    the dense spectrum up to dense_cap and Hutchinson + Chebyshev traces above it.
    The fixed-root array is zeros unless fixed_root is set.
    """
    points = t_grid.size
    if sample.censored:
        return np.zeros(points), np.zeros(points)
    if sample.size == 1:
        return np.ones(points), np.ones(points)
    if sample.size == 2:
        value = 0.5 * (1.0 + np.exp(-2.0 * t_grid / model.delta))
        return value, value.copy()
    kernel = drw_kernel(sample.graph, model.delta)
    if sample.size <= dense_cap:
        spectrum = exact_spectrum(kernel, dense_cap, with_vectors=fixed_root)
        trace = return_probabilities(spectrum, t_grid)
        root = root_return_probability(spectrum, sample.root, t_grid) if fixed_root else np.zeros(points)
        return trace, root
    logging.debug(f"[annealed] stream {stream_index}: N={sample.size} above the dense cap, stochastic trace")
    estimates = stochastic_heat_traces(kernel, t_grid, probes, seed=derive_seed(model.seed, stream_index))
    trace = np.array([estimate.value for estimate in estimates])
    root = root_return_chebyshev(kernel, sample.root, t_grid) if fixed_root else np.zeros(points)
    return trace, root


def annealed_campaign(
    model: PercolationModel,
    t_grid: Sequence[float],
    n_samples: int,
    dense_cap: int = DEFAULT_DENSE_CAP,
    probes: int = DEFAULT_PROBES,
    fixed_root: bool = False,
    workers: int = 4,
    orchestrator: CampaignOrchestrator | None = None
) -> AnnealedEstimate:
    """
    Monte-Carlo estimate of P_t = E[(1/|C_o|) Tr exp(-t(I - P))] on a time grid.

    Args:
        model (PercolationModel): family, p, delay, size cap and seed.
        t_grid: ascending non-negative times.
        n_samples (int): number of clusters, streams 0..n_samples-1.
        dense_cap (int): largest cluster handled by the dense eigensolver.
        probes (int): Hutchinson probes for clusters above dense_cap.
        fixed_root (bool): also estimate the root return probability P_o[X_t = o].
        workers (int): thread count; the result does not depend on it.

    Returns:
        AnnealedEstimate
    """
    times = np.asarray(t_grid, dtype=np.float64)
    if n_samples < 1:
        raise InvalidArgumentError(f"n_samples must be at least 1, got {n_samples}")
    if times.size == 0 or times.min() < 0 or np.any(np.diff(times) < 0):
        raise InvalidArgumentError("t_grid must be a non-empty ascending list of non-negative times")
    sampler = sampler_for(model)
    orchestrator = orchestrator or CampaignOrchestrator(workers=workers)

    def run_chunk(indices: range) -> _ChunkSums:
        sums = _ChunkSums.zeros(times.size)
        for stream_index in indices:
            sample = sampler.sample_cluster(model, stream_index)
            trace, root = cluster_traces(sample, model, times, stream_index, dense_cap, probes, fixed_root)
            sums.add(sample.size, sample.censored, trace, root, model.size_cap)
        return sums

    chunks = orchestrator.run(n_samples, run_chunk, label="annealed")
    total = _ChunkSums.zeros(times.size)
    for chunk in chunks:
        total.merge(chunk)

    p_t, p_t_se = _mean_and_error(total.trace, total.trace_sq, n_samples)
    gap, gap_se = _mean_and_error(total.gap, total.gap_sq, n_samples)
    kappa, kappa_se = _mean_and_error(total.inverse, total.inverse_sq, n_samples)
    chi, chi_se = _mean_and_error(total.size, total.size_sq, n_samples)
    censored = np.asarray(total.censored, dtype=bool)
    root = root_se = difference_se = None
    if fixed_root:
        root, root_se = _mean_and_error(total.root, total.root_sq, n_samples)
        _, difference_se = _mean_and_error(total.difference, total.difference_sq, n_samples)

    estimate = AnnealedEstimate(
        model=model,
        t_grid=times,
        n_samples=n_samples,
        p_t_hat=p_t,
        std_error=p_t_se,
        gap_hat=gap,
        gap_std_error=gap_se,
        kappa_hat=float(kappa),
        kappa_std_error=float(kappa_se),
        chi_hat=float(chi),
        chi_std_error=float(chi_se),
        censored_fraction=float(censored.mean()),
        sizes=np.asarray(total.sizes, dtype=np.int64),
        censored=censored,
        p_t_root_hat=root,
        root_std_error=root_se,
        difference_std_error=difference_se,
    )
    logging.info(
        f"[annealed] {model.family.value} p={model.p}: {n_samples} samples, "
        f"kappa {estimate.kappa_hat:.6f}, censored {estimate.censored_fraction:.2%}"
    )
    if estimate.use_envelope:
        logging.warning(
            f"[annealed] censored fraction {estimate.censored_fraction:.2%} above {ENVELOPE_THRESHOLD:g}; "
            "reporting [p_t_hat, p_t_upper] envelopes"
        )
    return estimate


def mass_transport_reports(est: AnnealedEstimate) -> List[BoundReport]:
    """Uniform-start vs fixed-root annealed return probability at every grid t."""
    if not est.fixed_root:
        raise InvalidArgumentError("The mass-transport check needs a campaign run with fixed_root=True")
    reports = []
    for i, t in enumerate(est.t_grid):
        combined = math.hypot(est.std_error[i], est.root_std_error[i])
        reports.append(BoundReport.make(
            BoundId.MASS_TRANSPORT,
            {"family": est.model.family.value, "p": est.model.p, "t": float(t), "n": est.n_samples,
             "paired_std_error": float(est.difference_std_error[i])},
            lhs=abs(est.p_t_hat[i] - est.p_t_root_hat[i]),
            rhs=4.0 * combined,
            slack=0.0,
        ))
    return reports


def mass_transport_check(
    model: PercolationModel,
    t: float,
    n_samples: int,
    dense_cap: int = DEFAULT_DENSE_CAP,
    workers: int = 4
) -> BoundReport:
    """E[P_o[X_t = o]] = E[P[X_t = X_0]] on one time, within 4 combined standard errors."""
    est = annealed_campaign(model, [t], n_samples, dense_cap=dense_cap, fixed_root=True, workers=workers)
    return mass_transport_reports(est)[0]


def theorem3_upper_constant(delta: int) -> float:
    return 27.0 * delta * (delta + 2)


def theorem3_upper_check(
    est: AnnealedEstimate,
    delta: int,
    alpha: float,
    moment_hat: float,
    b: float
) -> List[BoundReport]:
    """
    P_t - kappa <= 27 delta(delta+2) E[|C_o|^alpha] t^-(1+alpha)/2 at every positive grid t.

    Args:
        est (AnnealedEstimate): campaign results.
        delta (int): the walk's delay.
        alpha (float): moment order, 0 < alpha < b.
        moment_hat (float): empirical E[|C_o|^alpha].
        b (float): upper tail exponent of the cluster size.
    """
    if not 0.0 < alpha < b:
        raise InvalidArgumentError(f"alpha must satisfy 0 < alpha < b={b}, got alpha={alpha}")
    constant = theorem3_upper_constant(delta)
    reports = []
    for i, t in enumerate(est.t_grid):
        if t <= 0:
            continue
        rhs = constant * moment_hat * t ** (-(1.0 + alpha) / 2.0)
        note = "trivial: bound exceeds 1" if rhs >= 1.0 else ""
        reports.append(BoundReport.make(
            BoundId.THM3_UPPER,
            {"delta": delta, "alpha": alpha, "moment": moment_hat, "t": float(t)},
            lhs=est.gap_hat[i],
            rhs=rhs,
            slack=3.0 * est.gap_std_error[i],
            note=note,
        ))
    return reports


def theorem3_lower_constant(delta: int, tail: TailParams) -> float:
    """D = exp(-K) (A/2) / (1 + (2B/A)^(1/b)) with K = 12 sqrt(2) delta."""
    return math.exp(-boshier_constant(delta)) * (tail.A / 2.0) / (1.0 + (2.0 * tail.B / tail.A) ** (1.0 / tail.b))


def theorem3_lower_check(est: AnnealedEstimate, delta: int, tail: TailParams) -> List[BoundReport]:
    """
    D t^(-2a(1+1/b)) <= P_t - kappa for the grid times above sqrt(288).

    Raises:
        FamilyMismatchError: for non-planar hosts.
    """
    if not est.model.is_planar:
        raise FamilyMismatchError("The power-law lower bound needs planar clusters (Z^2)")
    constant = theorem3_lower_constant(delta, tail)
    exponent = 2.0 * tail.a * (1.0 + 1.0 / tail.b)
    reports = []
    for i, t in enumerate(est.t_grid):
        if t <= THEOREM3_LOWER_T_MIN:
            continue
        rhs = constant * t ** (-exponent)
        reports.append(BoundReport.make(
            BoundId.THM3_LOWER,
            {"delta": delta, "A": tail.A, "B": tail.B, "a": tail.a, "b": tail.b, "t": float(t)},
            lhs=est.gap_hat[i],
            rhs=rhs,
            sense="ge",
            slack=3.0 * est.gap_std_error[i],
            note="vacuous margin" if rhs < VACUOUS_BOUND else "",
        ))
    if not reports:
        logging.warning(f"[annealed] no grid time above {THEOREM3_LOWER_T_MIN:.2f}; lower power-law check skipped")
    return reports


def fit_decay_exponent(est: AnnealedEstimate, t_window: Tuple[float, float] | None = None) -> ExponentFit:
    """
    Weighted log-log fit of P_t - kappa against t.

    Only grid points where P_t - kappa exceeds five standard errors enter; the
    weights are the relative errors of P_t - kappa.

    Raises:
        InsufficientDataError: fewer than three usable points.
    """
    gap = np.asarray(est.gap_hat)
    errors = np.asarray(est.gap_std_error)
    mask = window_mask(est.t_grid, t_window) & (est.t_grid > 0) & (gap > FIT_SIGNIFICANCE * errors) & (gap > 0)
    if mask.sum() < 3:
        raise InsufficientDataError(f"Only {int(mask.sum())} significant points for the decay fit")
    fit = fit_power_law_weighted(est.t_grid[mask], gap[mask], errors[mask] / gap[mask])
    return ExponentFit(
        exponent=-fit.slope,
        window=fit.window,
        stderr=fit.stderr,
        r_squared=fit.r_squared,
        n_points=fit.n_points,
    )


def corollary1_bracket(family: Family, alpha: float = 0.1) -> Tuple[float, float]:
    """Accepted range of the decay exponent at criticality, fit tolerance included."""
    if Family(family) is Family.HOMOGENEOUS_TREE:
        return 0.75 - 0.15, 3.0 + 0.3
    if not 0.0 < alpha < 0.2:
        raise InvalidArgumentError(f"alpha must lie in (0, 1/5) on Z^2, got {alpha}")
    return (1.0 + alpha) / 2.0 - 0.15, (1.0 + 1.0 / alpha) + 0.3


def corollary1_exponent_check(fit: ExponentFit, family: Family, alpha: float = 0.1) -> List[BoundReport]:
    """
    Bracket check of a critical decay exponent.

    Raises:
        FitUnreliableError: if r^2 < 0.9; no verdict is given then.
    """
    if fit.r_squared < MIN_R_SQUARED:
        raise FitUnreliableError(f"Decay fit r^2 = {fit.r_squared:.3f} below {MIN_R_SQUARED}")
    low, high = corollary1_bracket(family, alpha)
    inputs = {"family": Family(family).value, "alpha": alpha, "window": f"{fit.window[0]:g}-{fit.window[1]:g}",
              "stderr": fit.stderr}
    return [
        BoundReport.make(BoundId.COR1_EXPONENT, dict(inputs, side="lower"), fit.exponent, low, sense="ge", slack=0.0),
        BoundReport.make(BoundId.COR1_EXPONENT, dict(inputs, side="upper"), fit.exponent, high, slack=0.0),
    ]


def kappa_sandwich_constant(d: int) -> float:
    if d < 1:
        raise InvalidArgumentError(f"Dimension must be positive, got d={d}")
    return min(d / 4.0 * (d * d + d + 8), 108.0 * d * (d + 1))


def _require_subcritical_lattice(est: AnnealedEstimate) -> None:
    if not est.model.is_planar or not est.model.is_subcritical:
        raise FamilyMismatchError(
            f"The clusters-per-site sandwich needs subcritical Z^2, got {est.model.family.value} p={est.model.p}"
        )


def kappa_sandwich_check(est: AnnealedEstimate, d: int = 2, chi_hat: float | None = None) -> List[BoundReport]:
    """
    P_t - c chi/t <= kappa <= P_t at every positive grid time, c = min{(d/4)(d^2+d+8), 108 d(d+1)}.
    """
    _require_subcritical_lattice(est)
    chi = est.chi_hat if chi_hat is None else chi_hat
    constant = kappa_sandwich_constant(d)
    reports = []
    for i, t in enumerate(est.t_grid):
        if t <= 0:
            continue
        slack = 3.0 * est.std_error[i]
        inputs = {"d": d, "c": constant, "chi": chi, "t": float(t)}
        reports.append(BoundReport.make(BoundId.KAPPA_UPPER, inputs, est.kappa_hat, est.p_t_hat[i], slack=slack))
        reports.append(BoundReport.make(
            BoundId.KAPPA_LOWER, inputs, est.p_t_hat[i] - constant * chi / t, est.kappa_hat, slack=slack,
        ))
    return reports


def kappa_poincare_check(est: AnnealedEstimate, d: int = 2) -> List[BoundReport]:
    """The second-moment form P_t - (2/d) E[|C|^2]/t <= kappa."""
    _require_subcritical_lattice(est)
    second_moment = est.size_moment(2.0)
    reports = []
    for i, t in enumerate(est.t_grid):
        if t <= 0:
            continue
        reports.append(BoundReport.make(
            BoundId.KAPPA_POINCARE_LOWER,
            {"d": d, "second_moment": second_moment, "t": float(t)},
            lhs=est.p_t_hat[i] - (2.0 / d) * second_moment / t,
            rhs=est.kappa_hat,
            slack=3.0 * est.std_error[i],
        ))
    return reports


@dataclass(frozen=True)
class BoxCountEstimate:
    """Clusters per site of the box {-L+1..L}^2, averaged over realizations."""

    value: float
    std_error: float
    L: int
    n_realizations: int


def grimmett_kappa_boxcount(
    model: PercolationModel,
    L: int,
    n_realizations: int,
    workers: int = 4
) -> BoxCountEstimate:
    """Number of open clusters per site of full box configurations."""
    if model.family is not Family.SQUARE_LATTICE_2D:
        raise FamilyMismatchError("Box counting is implemented for Z^2 only")
    if n_realizations < 1:
        raise InvalidArgumentError(f"n_realizations must be at least 1, got {n_realizations}")
    sites = (2 * L) ** 2

    def run_chunk(indices: range) -> np.ndarray:
        counts = []
        for index in indices:
            horizontal, vertical = box_configuration(model.p, L, model.seed, index)
            counts.append(box_components(horizontal, vertical)[0] / sites)
        return np.asarray(counts)

    orchestrator = CampaignOrchestrator(workers=workers, chunk_size=4)
    ratios = np.concatenate(orchestrator.run(n_realizations, run_chunk, label="kappa-box"))
    std_error = float(np.std(ratios, ddof=1) / math.sqrt(n_realizations)) if n_realizations > 1 else 0.0
    logging.info(f"[kappa-box] p={model.p} L={L}: {ratios.mean():.6f} +/- {std_error:.2g}")
    return BoxCountEstimate(value=float(ratios.mean()), std_error=std_error, L=L, n_realizations=n_realizations)


def kappa_agreement_report(est: AnnealedEstimate, box: BoxCountEstimate) -> BoundReport:
    """Cluster-mean and box-count estimates of kappa within 3 combined standard errors."""
    combined = math.hypot(est.kappa_std_error, box.std_error)
    return BoundReport.make(
        BoundId.KAPPA_BOX_AGREEMENT,
        {"p": est.model.p, "L": box.L, "realizations": box.n_realizations, "n": est.n_samples},
        lhs=abs(est.kappa_hat - box.value),
        rhs=3.0 * combined,
        slack=0.0,
    )


def theorem2_constant_c4() -> float:
    return 8.0 + math.sqrt(3.0 * math.pi)


def trace_fidelity_reports(
    kernel: DrwKernel,
    t_grid: Sequence[float],
    probes: int,
    seed: int = 0,
    dense_cap: int = DEFAULT_DENSE_CAP
) -> List[BoundReport]:
    """Stochastic heat trace against the dense one, within truncation + 4 standard errors."""
    times = np.asarray(t_grid, dtype=np.float64)
    spectrum = exact_spectrum(kernel, dense_cap)
    reports = []
    for estimate in stochastic_heat_traces(kernel, times, probes, seed=seed):
        exact = exact_heat_trace(spectrum, estimate.t)
        reports.append(BoundReport.make(
            BoundId.TRACE_FIDELITY,
            {"N": kernel.n, "t": estimate.t, "probes": probes, "degree": estimate.cheb_degree},
            lhs=abs(estimate.value - exact.value),
            rhs=estimate.truncation_bound + 4.0 * estimate.std_error,
            slack=EXACT_TRACE_SLACK,
        ))
    return reports
