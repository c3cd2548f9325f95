"""
Delayed-random-walk kernels and their spectra.

The kernel of the DRW with delay delta on a graph is P = I - (D - A)/delta: it
jumps across each incident edge with probability 1/delta and stays put otherwise.
The uniform-start return probability of the continuous-time walk is the
normalized heat trace (1/N) Tr exp(-t(I - P)). Below the dense cap it is
computed from the full spectrum; above it, by a Hutchinson estimator over a
Chebyshev expansion of x -> exp(-t(1 - x)) that only needs matrix-vector products.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy import sparse
from scipy.sparse.linalg import eigsh
from scipy.special import ive

from errors import DegenerateSpectrumError, InsufficientDataError, InvalidArgumentError, SizeExceededError
from graph_core import FiniteGraph
from utils import spawn_generator

DEFAULT_DENSE_CAP = 3000
SPECTRUM_TOLERANCE = 1e-9
PROBE_BLOCK = 32
TAIL_EPSILON = 1e-300


@dataclass(frozen=True)
class DrwKernel:
    """Transition kernel of the delayed random walk with delay `delta` on `graph`."""

    graph: FiniteGraph
    delta: int

    def __post_init__(self) -> None:
        if self.delta < 1:
            raise InvalidArgumentError(f"The delay must be at least 1, got delta={self.delta}")
        if self.delta < self.graph.max_degree:
            raise InvalidArgumentError(
                f"delta={self.delta} is below the max degree {self.graph.max_degree}; "
                "the diagonal of P would be negative"
            )

    @property
    def n(self) -> int:
        return self.graph.n

    @cached_property
    def diagonal(self) -> np.ndarray:
        return 1.0 - self.graph.degrees / self.delta

    @cached_property
    def sparse(self) -> sparse.csr_matrix:
        """P as a sparse symmetric matrix."""
        off_diagonal = self.graph.adjacency_matrix() / self.delta
        return (off_diagonal + sparse.diags(self.diagonal)).tocsr()

    def dense(self, dense_cap: int = DEFAULT_DENSE_CAP) -> np.ndarray:
        if self.n > dense_cap:
            raise SizeExceededError(f"Dense kernel requested for N={self.n} above the cap {dense_cap}")
        return self.sparse.toarray()

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.sparse @ x


@dataclass(frozen=True)
class Spectrum:
    """
    Eigenvalues of a DRW kernel, sorted descending (betas[0] is the Perron value).

    `vectors`, when present, holds the matching orthonormal eigenvectors as columns.
    """

    betas: np.ndarray
    delta: int
    vectors: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def n(self) -> int:
        return int(self.betas.size)

    @property
    def beta2(self) -> float:
        return float(self.betas[1]) if self.n > 1 else float("nan")


@dataclass(frozen=True)
class TraceEstimate:
    """Estimate of the normalized heat trace (1/N) Tr exp(-t(I - P)) at one time t."""

    t: float
    value: float
    std_error: float
    method: str
    probes: int = 0
    cheb_degree: int = 0
    truncation_bound: float = 0.0


def drw_kernel(g: FiniteGraph, delta: int) -> DrwKernel:
    """
    Builds the DRW kernel of g.

    Args:
        g (FiniteGraph): the state space.
        delta (int): the delay, at least max(1, max degree of g).

    Returns:
        DrwKernel: P with P_vw = 1/delta on edges and P_vv = 1 - deg(v)/delta.
    """
    return DrwKernel(graph=g, delta=int(delta))


def spectrum_of_symmetric(matrix: np.ndarray, delta: int, with_vectors: bool = False) -> Spectrum:
    """Full eigendecomposition of a dense symmetric matrix, eigenvalues descending."""
    if with_vectors:
        values, vectors = scipy.linalg.eigh(matrix)
        return Spectrum(betas=values[::-1].copy(), delta=delta, vectors=vectors[:, ::-1].copy())
    values = scipy.linalg.eigh(matrix, eigvals_only=True)
    return Spectrum(betas=values[::-1].copy(), delta=delta)


def exact_spectrum(k: DrwKernel, dense_cap: int = DEFAULT_DENSE_CAP, with_vectors: bool = False) -> Spectrum:
    """
    Computes every eigenvalue of the kernel with a dense symmetric eigensolver.

    Raises:
        SizeExceededError: if the graph has more than dense_cap vertices.
    """
    if k.n > dense_cap:
        raise SizeExceededError(
            f"Exact spectrum requested for N={k.n} above the dense cap {dense_cap}; use the stochastic path"
        )
    if k.n == 1:
        vectors = np.ones((1, 1)) if with_vectors else None
        return Spectrum(betas=np.ones(1), delta=k.delta, vectors=vectors)
    return spectrum_of_symmetric(k.dense(dense_cap), k.delta, with_vectors=with_vectors)


def spectrum_residuals(k: DrwKernel, s: Spectrum) -> np.ndarray:
    """Residual norms ||P v - beta v|| of every eigenpair."""
    if s.vectors is None:
        raise InvalidArgumentError("Residuals need a spectrum computed with eigenvectors")
    applied = k.sparse @ s.vectors
    return np.linalg.norm(applied - s.vectors * s.betas[np.newaxis, :], axis=0)


def product_spectrum(sx: Spectrum, sy: Spectrum) -> Spectrum:
    """Spectrum of the product kernel (P_X ⊗ I + I ⊗ P_Y)/2: all pairwise means."""
    betas = 0.5 * (sx.betas[:, np.newaxis] + sy.betas[np.newaxis, :]).ravel()
    return Spectrum(betas=np.sort(betas)[::-1], delta=sx.delta + sy.delta)


def product_kernel_matrix(kx: DrwKernel, ky: DrwKernel, dense_cap: int = DEFAULT_DENSE_CAP) -> np.ndarray:
    """Dense matrix (P_X ⊗ I + I ⊗ P_Y)/2 on the vertex pairs of G_X □ G_Y."""
    if kx.n * ky.n > dense_cap:
        raise SizeExceededError(f"Product kernel of size {kx.n * ky.n} exceeds the dense cap {dense_cap}")
    px, py = kx.dense(dense_cap), ky.dense(dense_cap)
    return 0.5 * (np.kron(px, np.eye(ky.n)) + np.kron(np.eye(kx.n), py))


def _check_time(t: float) -> None:
    if t < 0 or math.isnan(t):
        raise InvalidArgumentError(f"Time must be non-negative, got t={t}")


def return_probability(s: Spectrum, t: float) -> float:
    """
    Uniform-start return probability P[X_t = X_0] = (1/N) sum_j exp(-t(1 - beta_j)).
    """
    _check_time(t)
    return float(np.mean(np.exp(-t * (1.0 - s.betas))))


def return_probabilities(s: Spectrum, t_grid: Sequence[float]) -> np.ndarray:
    """return_probability evaluated on a whole time grid."""
    times = np.asarray(t_grid, dtype=np.float64)
    if times.size and (times.min() < 0 or np.isnan(times).any()):
        raise InvalidArgumentError("Times must be non-negative")
    return np.exp(-np.outer(times, 1.0 - s.betas)).mean(axis=1)


def root_return_probability(s: Spectrum, root: int, t_grid: Sequence[float]) -> np.ndarray:
    """Fixed-root return probability P_root[X_t = root] from the eigenvectors."""
    if s.vectors is None:
        raise InvalidArgumentError("Fixed-root return probabilities need eigenvectors")
    times = np.asarray(t_grid, dtype=np.float64)
    weights = s.vectors[root, :] ** 2
    return np.exp(-np.outer(times, 1.0 - s.betas)) @ weights


def spectral_gap(s: Spectrum) -> float:
    """
    Returns lambda = 1 - beta_2.

    Raises:
        InvalidArgumentError: for a single vertex.
        DegenerateSpectrumError: if beta_2 = 1 within tolerance (disconnected graph).
    """
    if s.n < 2:
        raise InvalidArgumentError("The spectral gap needs at least two vertices")
    gap = 1.0 - float(s.betas[1])
    if gap <= SPECTRUM_TOLERANCE:
        raise DegenerateSpectrumError(f"beta_2 = {s.betas[1]!r} equals 1: the graph is disconnected")
    return gap


def lanczos_gap(k: DrwKernel, dense_cap: int = DEFAULT_DENSE_CAP) -> float:
    """Spectral gap via implicitly restarted Lanczos; falls back to dense below 3 vertices."""
    if k.n < 3:
        return spectral_gap(exact_spectrum(k, dense_cap))
    values = eigsh(k.sparse, k=2, which="LA", return_eigenvectors=False, tol=1e-12)
    beta2 = float(np.min(values))
    gap = 1.0 - beta2
    if gap <= SPECTRUM_TOLERANCE:
        raise DegenerateSpectrumError(f"beta_2 = {beta2!r} equals 1: the graph is disconnected")
    return gap


def default_cheb_degree(t: float) -> int:
    return max(30, int(math.ceil(2.0 * t)) + 20)


def heat_chebyshev_coefficients(t: float, degree: int) -> Tuple[np.ndarray, float]:
    """
    Chebyshev coefficients of x -> exp(-t(1 - x)) on [-1, 1].

    exp(t x) = I_0(t) + 2 sum_k I_k(t) T_k(x), so with the exponentially scaled Bessel
    functions ive(k, t) = exp(-t) I_k(t) the coefficients are ive(0, t), 2 ive(k, t).

    Returns:
        (coefficients of length degree+1, sum of absolute values of the dropped ones).
        The second value bounds the sup-norm truncation error on [-1, 1].
    """
    _check_time(t)
    if degree < 0:
        raise InvalidArgumentError(f"Chebyshev degree must be non-negative, got {degree}")
    orders = np.arange(degree + 1)
    coefficients = 2.0 * ive(orders, t)
    coefficients[0] *= 0.5
    tail_orders = np.arange(degree + 1, degree + 1 + 64 + 4 * int(math.ceil(t)) + 8 * int(math.ceil(math.sqrt(t))))
    tail = 2.0 * ive(tail_orders, t)
    truncation = float(np.sum(np.abs(tail[tail > TAIL_EPSILON])))
    return coefficients, truncation


def chebyshev_moments(k: DrwKernel, vectors: np.ndarray, degree: int) -> np.ndarray:
    """
    Quadratic forms z^T T_j(P) z for every column z and every j = 0..degree.

    Uses the three-term recurrence T_{j+1}(P) z = 2 P T_j(P) z - T_{j-1}(P) z, so the
    cost is `degree` sparse products with the block of vectors.
    """
    block = np.asarray(vectors, dtype=np.float64)
    if block.ndim == 1:
        block = block[:, np.newaxis]
    moments = np.empty((degree + 1, block.shape[1]))
    previous = block
    moments[0] = np.einsum("ij,ij->j", block, previous)
    if degree == 0:
        return moments
    current = k.sparse @ block
    moments[1] = np.einsum("ij,ij->j", block, current)
    for j in range(2, degree + 1):
        previous, current = current, 2.0 * (k.sparse @ current) - previous
        moments[j] = np.einsum("ij,ij->j", block, current)
    return moments


def rademacher_probe(n: int, seed: int, probe_index: int) -> np.ndarray:
    rng = spawn_generator(seed, probe_index)
    return rng.integers(0, 2, size=n).astype(np.float64) * 2.0 - 1.0


def _probe_block_moments(k: DrwKernel, seed: int, indices: range, degree: int) -> np.ndarray:
    block = np.column_stack([rademacher_probe(k.n, seed, j) for j in indices])
    return chebyshev_moments(k, block, degree)


def stochastic_heat_traces(
    k: DrwKernel,
    t_grid: Sequence[float],
    probes: int,
    cheb_degree: int | None = None,
    seed: int = 0,
    workers: int = 1
) -> List[TraceEstimate]:
    """
    Hutchinson estimates of the normalized heat trace for every t in t_grid.

    One Chebyshev pass per probe serves the whole grid: the moments z^T T_j(P) z
    do not depend on t, only the coefficients do. Probe j is drawn from the j-th
    substream of `seed` and probes are processed in fixed blocks, so the result is
    the same for any number of workers.
    """
    if probes < 1:
        raise InvalidArgumentError(f"At least one probe is needed, got {probes}")
    times = [float(t) for t in t_grid]
    for t in times:
        _check_time(t)
    degree = cheb_degree if cheb_degree is not None else default_cheb_degree(max(times, default=0.0))
    if degree < 0:
        raise InvalidArgumentError(f"Chebyshev degree must be non-negative, got {degree}")

    blocks = [range(start, min(start + PROBE_BLOCK, probes)) for start in range(0, probes, PROBE_BLOCK)]
    with ThreadPoolExecutor(max_workers=max(1, min(workers, len(blocks)))) as executor:
        results = list(executor.map(lambda idx: _probe_block_moments(k, seed, idx, degree), blocks))
    moments = np.concatenate(results, axis=1)
    logging.debug(f"[spectral] {probes} probes, degree {degree}, N={k.n}")

    estimates: List[TraceEstimate] = []
    for t in times:
        coefficients, truncation = heat_chebyshev_coefficients(t, degree)
        samples = coefficients @ moments / k.n
        std_error = float(np.std(samples, ddof=1) / math.sqrt(probes)) if probes > 1 else 0.0
        estimates.append(TraceEstimate(
            t=t,
            value=float(np.mean(samples)),
            std_error=std_error,
            method="stochastic",
            probes=probes,
            cheb_degree=degree,
            truncation_bound=truncation,
        ))
    return estimates


def stochastic_heat_trace(
    k: DrwKernel,
    t: float,
    probes: int,
    cheb_degree: int,
    seed: int = 0,
    workers: int = 1
) -> TraceEstimate:
    """Hutchinson + Chebyshev estimate of (1/N) Tr exp(-t(I - P)) at a single time."""
    if cheb_degree < 1:
        raise InvalidArgumentError(f"Chebyshev degree must be at least 1, got {cheb_degree}")
    return stochastic_heat_traces(k, [t], probes, cheb_degree, seed, workers)[0]


def exact_heat_trace(s: Spectrum, t: float) -> TraceEstimate:
    return TraceEstimate(t=float(t), value=return_probability(s, t), std_error=0.0, method="exact")


def root_return_chebyshev(
    k: DrwKernel,
    root: int,
    t_grid: Sequence[float],
    cheb_degree: int | None = None
) -> np.ndarray:
    """Fixed-root return probability e_root^T exp(-t(I - P)) e_root by Chebyshev recurrence."""
    times = [float(t) for t in t_grid]
    degree = cheb_degree if cheb_degree is not None else default_cheb_degree(max(times, default=0.0))
    unit = np.zeros(k.n)
    unit[root] = 1.0
    moments = chebyshev_moments(k, unit, degree)[:, 0]
    return np.array([heat_chebyshev_coefficients(t, degree)[0] @ moments for t in times])


def lanczos_quadrature(
    k: DrwKernel,
    probes: int,
    steps: int,
    seed: int = 0,
    deflate_constant: bool = True
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Stochastic Lanczos quadrature of the spectral measure of a connected graph's kernel.

    Returns nodes (eigenvalue estimates of P) and weights summing to N. With
    deflate_constant the probes are projected off the constant Perron vector, the
    Perron value 1 is returned as an exact node of weight 1 and the quadrature
    carries the remaining N - 1 units of mass.

    Raises:
        InsufficientDataError: if every probe is constant, so nothing is left after deflation.
    """
    if probes < 1 or steps < 1:
        raise InvalidArgumentError(f"Lanczos quadrature needs probes >= 1 and steps >= 1, got {probes}, {steps}")
    if k.n == 1:
        return np.ones(1), np.ones(1)
    all_nodes: List[np.ndarray] = []
    all_weights: List[np.ndarray] = []
    for j in range(probes):
        z = rademacher_probe(k.n, seed, j)
        if deflate_constant:
            z = z - z.mean()
        norm = np.linalg.norm(z)
        if norm == 0.0:
            continue
        nodes, weights = _lanczos_nodes(k, z / norm, min(steps, k.n - 1 if deflate_constant else k.n))
        all_nodes.append(nodes)
        all_weights.append(weights * norm ** 2)
    if not all_nodes:
        raise InsufficientDataError(f"All {probes} probes vanished after removing the constant vector (N={k.n})")
    nodes = np.concatenate(all_nodes)
    weights = np.concatenate(all_weights) / max(len(all_nodes), 1)
    remaining = k.n - 1 if deflate_constant else k.n
    weights *= remaining / weights.sum()
    if deflate_constant:
        nodes = np.concatenate([[1.0], nodes])
        weights = np.concatenate([[1.0], weights])
    return nodes, weights


def _lanczos_nodes(k: DrwKernel, q0: np.ndarray, steps: int) -> Tuple[np.ndarray, np.ndarray]:
    basis = np.zeros((k.n, steps))
    alphas: List[float] = []
    betas: List[float] = []
    q = q0
    for i in range(steps):
        basis[:, i] = q
        w = k.sparse @ q
        alpha = float(q @ w)
        w = w - alpha * q
        if i > 0:
            w = w - betas[-1] * basis[:, i - 1]
        w = w - basis[:, :i + 1] @ (basis[:, :i + 1].T @ w)
        alphas.append(alpha)
        beta = float(np.linalg.norm(w))
        if i == steps - 1 or beta < 1e-10:
            break
        betas.append(beta)
        q = w / beta
    off = np.asarray(betas[:len(alphas) - 1])
    theta, ritz = scipy.linalg.eigh_tridiagonal(np.asarray(alphas), off)
    return theta, ritz[0, :] ** 2
