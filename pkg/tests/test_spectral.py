import math

import networkx as nx
import numpy as np
import pytest

import spectral
from errors import DegenerateSpectrumError, InsufficientDataError, InvalidArgumentError, SizeExceededError
from graph_core import FiniteGraph, complete_graph, cycle_graph, grid_graph, path_graph
from spectral import (
    drw_kernel,
    exact_heat_trace,
    exact_spectrum,
    heat_chebyshev_coefficients,
    lanczos_gap,
    lanczos_quadrature,
    product_kernel_matrix,
    product_spectrum,
    return_probabilities,
    return_probability,
    root_return_chebyshev,
    root_return_probability,
    spectral_gap,
    spectrum_of_symmetric,
    spectrum_residuals,
    stochastic_heat_trace,
    stochastic_heat_traces,
)


def test_cycle_spectrum_is_cosines():
    m = 9
    spectrum = exact_spectrum(drw_kernel(cycle_graph(m), 2))
    expected = np.sort(np.cos(2.0 * np.pi * np.arange(m) / m))[::-1]
    np.testing.assert_allclose(spectrum.betas, expected, atol=1e-12)


def test_complete_graph_spectrum():
    n = 6
    spectrum = exact_spectrum(drw_kernel(complete_graph(n), n - 1))
    assert spectrum.betas[0] == pytest.approx(1.0)
    np.testing.assert_allclose(spectrum.betas[1:], 1.0 - n / (n - 1), atol=1e-12)


def test_kernel_matches_networkx_laplacian():
    g = grid_graph(3, 3)
    kernel = drw_kernel(g, 4)
    laplacian = nx.laplacian_matrix(nx.grid_2d_graph(3, 3), nodelist=sorted(nx.grid_2d_graph(3, 3))).toarray()
    np.testing.assert_allclose(kernel.dense(), np.eye(9) - laplacian / 4.0, atol=1e-12)
    np.testing.assert_allclose(kernel.dense().sum(axis=1), 1.0)


def test_kernel_rejects_small_delay():
    with pytest.raises(InvalidArgumentError):
        drw_kernel(complete_graph(5), 3)


def test_dense_cap_is_enforced():
    with pytest.raises(SizeExceededError):
        exact_spectrum(drw_kernel(path_graph(20), 2), dense_cap=10)


def test_return_probability_basics():
    spectrum = exact_spectrum(drw_kernel(cycle_graph(8), 2))
    assert return_probability(spectrum, 0.0) == pytest.approx(1.0)
    values = return_probabilities(spectrum, [0.5, 5.0, 500.0])
    assert np.all(np.diff(values) < 0)
    assert values[-1] == pytest.approx(1.0 / 8.0, abs=1e-6)
    with pytest.raises(InvalidArgumentError):
        return_probability(spectrum, -1.0)
    assert exact_heat_trace(spectrum, 2.0).std_error == 0.0


def test_single_vertex():
    spectrum = exact_spectrum(drw_kernel(path_graph(1), 1))
    assert return_probability(spectrum, 10.0) == pytest.approx(1.0)
    with pytest.raises(InvalidArgumentError):
        spectral_gap(spectrum)


def test_disconnected_graph_has_no_gap():
    g = FiniteGraph.from_edges(4, [(0, 1), (2, 3)])
    with pytest.raises(DegenerateSpectrumError):
        spectral_gap(exact_spectrum(drw_kernel(g, 1)))


def test_lanczos_gap_matches_dense_gap():
    kernel = drw_kernel(grid_graph(6, 7), 4)
    assert lanczos_gap(kernel) == pytest.approx(spectral_gap(exact_spectrum(kernel)), rel=1e-8)


def test_residuals_are_small():
    kernel = drw_kernel(grid_graph(4, 5), 4)
    spectrum = exact_spectrum(kernel, with_vectors=True)
    assert np.max(spectrum_residuals(kernel, spectrum)) < 1e-10


def test_product_factorization():
    kx, ky = drw_kernel(cycle_graph(5), 2), drw_kernel(path_graph(4), 2)
    sx, sy = exact_spectrum(kx), exact_spectrum(ky)
    explicit = spectrum_of_symmetric(product_kernel_matrix(kx, ky), 4)
    np.testing.assert_allclose(explicit.betas, product_spectrum(sx, sy).betas, atol=1e-12)
    for t in (0.1, 1.0, 10.0):
        assert return_probability(explicit, 2.0 * t) == pytest.approx(
            return_probability(sx, t) * return_probability(sy, t), abs=1e-12)


def test_chebyshev_coefficients_reproduce_exponential():
    t = 7.0
    coefficients, truncation = heat_chebyshev_coefficients(t, 60)
    x = np.linspace(-1.0, 1.0, 11)
    approximation = np.polynomial.chebyshev.chebval(x, coefficients)
    np.testing.assert_allclose(approximation, np.exp(-t * (1.0 - x)), atol=1e-12)
    assert truncation < 1e-12


def test_root_return_chebyshev_matches_eigenvectors():
    kernel = drw_kernel(grid_graph(5, 5), 4)
    spectrum = exact_spectrum(kernel, with_vectors=True)
    times = [0.5, 2.0, 8.0]
    np.testing.assert_allclose(
        root_return_chebyshev(kernel, 12, times),
        root_return_probability(spectrum, 12, times),
        atol=1e-10,
    )


def test_stochastic_trace_agrees_with_exact_trace():
    kernel = drw_kernel(grid_graph(12, 12), 4)
    spectrum = exact_spectrum(kernel)
    times = [1.0, 4.0, 16.0]
    estimates = stochastic_heat_traces(kernel, times, probes=256, seed=3)
    for estimate, t in zip(estimates, times):
        exact = return_probability(spectrum, t)
        assert estimate.method == "stochastic"
        assert abs(estimate.value - exact) <= 5.0 * estimate.std_error + estimate.truncation_bound + 1e-9


def test_stochastic_trace_is_independent_of_worker_count():
    kernel = drw_kernel(grid_graph(8, 8), 4)
    one = stochastic_heat_traces(kernel, [2.0], probes=70, seed=11, workers=1)[0]
    many = stochastic_heat_traces(kernel, [2.0], probes=70, seed=11, workers=4)[0]
    assert one.value == many.value
    assert stochastic_heat_trace(kernel, 2.0, 70, one.cheb_degree, seed=11).value == one.value


def test_stochastic_trace_rejects_zero_probes():
    with pytest.raises(InvalidArgumentError):
        stochastic_heat_traces(drw_kernel(cycle_graph(4), 2), [1.0], probes=0)


def test_lanczos_quadrature_mass_and_trace():
    kernel = drw_kernel(grid_graph(10, 10), 4)
    nodes, weights = lanczos_quadrature(kernel, probes=30, steps=40, seed=5)
    assert weights.sum() == pytest.approx(kernel.n)
    assert nodes[0] == 1.0 and weights[0] == 1.0
    exact = return_probability(exact_spectrum(kernel), 3.0)
    quadrature = float(np.sum(weights * np.exp(-3.0 * (1.0 - nodes))) / kernel.n)
    assert quadrature == pytest.approx(exact, rel=0.1)
    assert math.isclose(lanczos_quadrature(drw_kernel(path_graph(1), 1), 1, 1)[1].sum(), 1.0)


def test_lanczos_quadrature_rejects_all_constant_vectors(monkeypatch):
    monkeypatch.setattr(spectral, "rademacher_probe", lambda n, seed, j: np.ones(n))
    with pytest.raises(InsufficientDataError):
        lanczos_quadrature(drw_kernel(cycle_graph(6), 2), probes=4, steps=3)
