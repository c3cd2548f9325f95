"""
Small-graph verification suites run by `verify-finite`.

Each suite draws its graphs from its own substream family of the seed, so adding
graphs to one suite never changes the graphs of another.
"""
from __future__ import annotations

import logging
import logging_config  # noqa: F401
from typing import List, Sequence

import numpy as np

from annealed import trace_fidelity_reports
from bounds import (
    BoundId,
    BoundReport,
    TailParams,
    c_delta_envelope_reports,
    cheeger_constant,
    eq7_cycle_comparison,
    heavy_tail_check,
    it_bound_i,
    it_bound_ii,
    it_exact,
    planar_gap_reports,
    poincare_gap_lower,
    thm1_reports,
)
from errors import InsufficientDataError
from graph_core import FiniteGraph, path_graph
from percolation import ClusterSample, Family, PercolationModel, SquareLatticeSampler
from spectral import (
    drw_kernel,
    exact_spectrum,
    lanczos_gap,
    product_kernel_matrix,
    product_spectrum,
    return_probabilities,
    return_probability,
    spectral_gap,
    spectrum_of_symmetric,
    spectrum_residuals,
)
from utils import derive_seed, spawn_generator

THM1_TIMES = (0.5, 1.0, 2.0, 5.0, 10.0, 50.0, 200.0)
LEMMA32_TIMES = (0.1, 1.0, 10.0, 100.0)
LEMMA32_SIZES = range(4, 65)
FACTORIZATION_TIMES = (0.1, 1.0, 10.0)
FACTORIZATION_TOLERANCE = 1e-10
RESIDUAL_TOLERANCE = 1e-9
FACTORIZATION_MAX_VERTICES = 8
EQ7_MAX_VERTICES = 10
CHEEGER_MAX_VERTICES = 14
EXTRA_EDGE_PROBABILITY = 0.3
PLANAR_MIN_SIZE = 289
PLANAR_MAX_SIZE = 3000
PLANAR_CLUSTERS = 50
FIDELITY_CLUSTERS = 20
FIDELITY_MIN_SIZE = 500
FIDELITY_PROBES = 200
FIDELITY_TIMES = (1.0, 10.0, 100.0)
WINDOW_ATTEMPTS_PER_CLUSTER = 50
C_DELTA_DELAYS = range(3, 9)
C_DELTA_YS = (0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95)

# Substream family per suite.
THM1_STREAMS, FACTORIZATION_STREAMS, EQ7_STREAMS, CHEEGER_STREAMS, PLANAR_STREAMS, FIDELITY_STREAMS = range(6)


def random_connected_graph(
    rng: np.random.Generator,
    n: int,
    extra_edge_probability: float = EXTRA_EDGE_PROBABILITY
) -> FiniteGraph:
    """
    Random connected graph on n vertices: a random recursive tree plus every
    other pair independently with probability extra_edge_probability.
    """
    edges = [(v, int(rng.integers(0, v))) for v in range(1, n)]
    tree = {(min(u, v), max(u, v)) for u, v in edges}
    extra = rng.random(n * (n - 1) // 2) < extra_edge_probability
    position = 0
    for u in range(n):
        for v in range(u + 1, n):
            if extra[position] and (u, v) not in tree:
                edges.append((u, v))
            position += 1
    return FiniteGraph.from_edges(n, edges)


def _graph_stream(seed: int, family: int, index: int, n_min: int, n_max: int) -> FiniteGraph:
    rng = spawn_generator(derive_seed(seed, family), index)
    n = int(rng.integers(n_min, n_max + 1))
    return random_connected_graph(rng, n)


def sabotage_report(report: BoundReport) -> BoundReport:
    """Reflects an upper bound of Theorem 1 i) through 1/N, where it can no longer hold."""
    floor = 1.0 / report.inputs["N"]
    return BoundReport.make(report.bound_id, dict(report.inputs, sabotaged=True), report.lhs,
                            floor - (report.rhs - floor))


def theorem1_suite(seed: int, n_graphs: int, n_max: int, sabotage: bool = False) -> List[BoundReport]:
    """Upper bounds i) and ii) at every k on random connected graphs with 3 <= N <= n_max."""
    if n_max < 3:
        logging.info("[verify] Theorem 1 sweep skipped: graphs need at least 3 vertices")
        return []
    reports: List[BoundReport] = []
    for index in range(n_graphs):
        g = _graph_stream(seed, THM1_STREAMS, index, 3, n_max)
        delta = max(g.max_degree, 1)
        kernel = drw_kernel(g, delta)
        spectrum = exact_spectrum(kernel, with_vectors=True)
        reports.append(BoundReport.make(
            BoundId.SPECTRUM_RESIDUAL,
            {"N": g.n, "m": g.m, "delta": delta},
            lhs=float(spectrum_residuals(kernel, spectrum).max()),
            rhs=0.0,
            slack=RESIDUAL_TOLERANCE,
        ))
        exact = return_probabilities(spectrum, THM1_TIMES)
        for report in thm1_reports(spectrum, delta, THM1_TIMES, exact):
            if sabotage and report.bound_id is BoundId.THM1_I:
                report = sabotage_report(report)
            reports.append(report)
    return reports


def lemma32_suite(
    sizes: Sequence[int] = LEMMA32_SIZES,
    t_values: Sequence[float] = LEMMA32_TIMES
) -> List[BoundReport]:
    reports: List[BoundReport] = []
    for N in sizes:
        for t in t_values:
            for k in range(1, N - 1):
                exact = it_exact(k, N, t)
                inputs = {"k": k, "N": N, "t": t}
                reports.append(BoundReport.make(BoundId.LEM32_I, inputs, exact, it_bound_i(k, N, t)))
                reports.append(BoundReport.make(BoundId.LEM32_II, inputs, exact, it_bound_ii(k, N, t)))
    return reports


def factorization_suite(seed: int, n_pairs: int, n_max: int) -> List[BoundReport]:
    """
    Heat trace of the product walk at 2t against the product of the factor traces at t.

    The product side is diagonalized from the explicit kernel (P_X x I + I x P_Y)/2,
    not from the pairwise eigenvalue formula.
    """
    upper = min(n_max, FACTORIZATION_MAX_VERTICES)
    if upper < 2:
        return []
    reports: List[BoundReport] = []
    for index in range(n_pairs):
        gx = _graph_stream(seed, FACTORIZATION_STREAMS, 2 * index, 2, upper)
        gy = _graph_stream(seed, FACTORIZATION_STREAMS, 2 * index + 1, 2, upper)
        kx, ky = drw_kernel(gx, gx.max_degree), drw_kernel(gy, gy.max_degree)
        sx, sy = exact_spectrum(kx), exact_spectrum(ky)
        product = spectrum_of_symmetric(product_kernel_matrix(kx, ky), kx.delta + ky.delta)
        reports.append(BoundReport.make(
            BoundId.LEM33_PRODUCT_SPECTRUM,
            {"Nx": gx.n, "Ny": gy.n},
            lhs=float(np.max(np.abs(product_spectrum(sx, sy).betas - product.betas))),
            rhs=0.0,
            slack=FACTORIZATION_TOLERANCE,
        ))
        for t in FACTORIZATION_TIMES:
            lhs = abs(return_probability(product, 2.0 * t) - return_probability(sx, t) * return_probability(sy, t))
            reports.append(BoundReport.make(
                BoundId.LEM33_FACTORIZATION,
                {"Nx": gx.n, "Ny": gy.n, "t": t},
                lhs=lhs,
                rhs=0.0,
                slack=FACTORIZATION_TOLERANCE,
            ))
    return reports


def eq7_suite(seed: int, n_graphs: int, n_max: int) -> List[BoundReport]:
    upper = min(n_max, EQ7_MAX_VERTICES)
    if upper < 2:
        return []
    reports: List[BoundReport] = []
    for index in range(n_graphs):
        g = _graph_stream(seed, EQ7_STREAMS, index, 2, upper)
        reports.extend(eq7_cycle_comparison(g, max(3, g.max_degree)))
    return reports


def heavy_tail_suite(m_max: int = 1000, truncation: int = 10 ** 6) -> List[BoundReport]:
    """Phi(m) = m^-1/2, so A = B = 1 and a = b = 1/2."""
    params = TailParams(A=1.0, B=1.0, a=0.5, b=0.5)
    reports = heavy_tail_check(params, lambda k: k ** -0.5, m_max=m_max, truncation=truncation)
    published_violations = sum(1 for report in reports if report.note)
    if published_violations:
        logging.warning(f"[verify] published heavy-tail constant exceeds the tail sum at {published_violations} m")
    return reports


def cheeger_suite(seed: int, n_graphs: int, max_vertices: int = CHEEGER_MAX_VERTICES) -> List[BoundReport]:
    """
    Spectral gap against the brute-force isoperimetric number, delay max(2, max degree),
    on graphs of 2..max_vertices vertices.
    """
    upper = min(max_vertices, CHEEGER_MAX_VERTICES)
    if upper < 2:
        return []
    reports: List[BoundReport] = []
    for index in range(n_graphs):
        g = _graph_stream(seed, CHEEGER_STREAMS, index, 2, upper)
        delta = max(2, g.max_degree)
        gap = spectral_gap(exact_spectrum(drw_kernel(g, delta)))
        reports.append(BoundReport.make(
            BoundId.CHEEGER_LE_ISOPERIMETRIC,
            {"N": g.n, "m": g.m, "delta": delta},
            lhs=gap,
            rhs=cheeger_constant(g),
        ))
    return reports


def poincare_suite(n_max: int) -> List[BoundReport]:
    """1 - beta_2 >= 4/(delta N^2) on the paths P_2..P_n_max with delta = 2."""
    reports: List[BoundReport] = []
    for N in range(2, max(n_max, 2) + 1):
        gap = spectral_gap(exact_spectrum(drw_kernel(path_graph(N), 2)))
        reports.append(BoundReport.make(BoundId.POINCARE_PATH, {"N": N, "delta": 2}, gap, poincare_gap_lower(N, 2),
                                        sense="ge"))
    return reports


def window_clusters(
    seed: int,
    stream_family: int,
    n_clusters: int,
    p: float,
    min_size: int,
    max_size: int
) -> List[ClusterSample]:
    """
    First n_clusters explored Z^2 clusters with min_size..max_size sites.

    Exploration is cut at max_size, and a cut cluster is still a connected planar
    graph, so both complete and censored clusters qualify.
    """
    model = PercolationModel(Family.SQUARE_LATTICE_2D, delta=4, p=p, size_cap=max_size,
                             seed=derive_seed(seed, stream_family))
    sampler = SquareLatticeSampler()
    accepted: List[ClusterSample] = []
    for stream_index in range(WINDOW_ATTEMPTS_PER_CLUSTER * n_clusters):
        sample = sampler.sample_cluster(model, stream_index)
        if sample.size >= min_size:
            accepted.append(sample)
            if len(accepted) == n_clusters:
                return accepted
    raise InsufficientDataError(
        f"Only {len(accepted)} of {n_clusters} clusters at p={p} reached {min_size} sites "
        f"in {WINDOW_ATTEMPTS_PER_CLUSTER * n_clusters} attempts"
    )


def planar_cluster_suite(
    seed: int,
    n_clusters: int,
    p: float = 0.5,
    min_size: int = PLANAR_MIN_SIZE,
    max_size: int = PLANAR_MAX_SIZE
) -> List[BoundReport]:
    """Gap form of the planar lower bound on explored Z^2 clusters of min_size..max_size sites."""
    if n_clusters < 1:
        return []
    reports: List[BoundReport] = []
    for sample in window_clusters(seed, PLANAR_STREAMS, n_clusters, p, min_size, max_size):
        gap = lanczos_gap(drw_kernel(sample.graph, 4))
        reports.extend(planar_gap_reports(sample.size, 4, gap))
    return reports


def trace_fidelity_suite(
    seed: int,
    n_clusters: int,
    probes: int = FIDELITY_PROBES,
    t_values: Sequence[float] = FIDELITY_TIMES,
    p: float = 0.5,
    min_size: int = FIDELITY_MIN_SIZE,
    max_size: int = PLANAR_MAX_SIZE
) -> List[BoundReport]:
    """Stochastic heat trace of Z^2 clusters against the dense one."""
    if n_clusters < 1:
        return []
    reports: List[BoundReport] = []
    clusters = window_clusters(seed, FIDELITY_STREAMS, n_clusters, p, min_size, max_size)
    for index, sample in enumerate(clusters):
        kernel = drw_kernel(sample.graph, 4)
        reports.extend(trace_fidelity_reports(kernel, t_values, probes,
                                              seed=derive_seed(seed, FIDELITY_STREAMS, index),
                                              dense_cap=max_size))
    return reports


def c_delta_suite() -> List[BoundReport]:
    return c_delta_envelope_reports(C_DELTA_DELAYS, C_DELTA_YS)


def run_finite_suites(
    seed: int = 0,
    n_graphs: int = 200,
    n_max: int = 12,
    sabotage: bool = False,
    planar_clusters: int = PLANAR_CLUSTERS,
    fidelity_clusters: int = FIDELITY_CLUSTERS
) -> List[BoundReport]:
    """
    All small-graph suites. n_graphs drives the Theorem 1 sweep; the
    factorization and cycle-comparison suites use half as many graphs and the
    Cheeger suite two and a half times as many.

    The Cheeger suite always reaches CHEEGER_MAX_VERTICES, except that n_max = 2
    keeps every random-graph suite on K_2.
    """
    half = max(1, n_graphs // 2)
    cheeger_vertices = CHEEGER_MAX_VERTICES if n_max > 2 else n_max
    suites = [
        ("thm1", lambda: theorem1_suite(seed, n_graphs, n_max, sabotage)),
        ("lemma32", lemma32_suite),
        ("factorization", lambda: factorization_suite(seed, half, n_max)),
        ("eq7", lambda: eq7_suite(seed, half, n_max)),
        ("heavy_tail", heavy_tail_suite),
        ("c_delta", c_delta_suite),
        ("cheeger", lambda: cheeger_suite(seed, max(1, 5 * n_graphs // 2), cheeger_vertices)),
        ("poincare", lambda: poincare_suite(n_max)),
        ("planar", lambda: planar_cluster_suite(seed, planar_clusters)),
        ("trace_fidelity", lambda: trace_fidelity_suite(seed, fidelity_clusters)),
    ]
    reports: List[BoundReport] = []
    for name, suite in suites:
        suite_reports = suite()
        failed = sum(1 for report in suite_reports if not report.satisfied)
        level = logging.ERROR if failed else logging.INFO
        logging.log(level, f"[verify] {name}: {len(suite_reports)} reports, {failed} failed")
        reports.extend(suite_reports)
    return reports
