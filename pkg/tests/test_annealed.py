import math

import numpy as np
import pytest

from annealed import (
    CAMPAIGN_COLUMNS,
    AnnealedEstimate,
    ExponentFit,
    annealed_campaign,
    cluster_traces,
    corollary1_bracket,
    corollary1_exponent_check,
    fit_decay_exponent,
    grimmett_kappa_boxcount,
    kappa_agreement_report,
    kappa_poincare_check,
    kappa_sandwich_check,
    kappa_sandwich_constant,
    mass_transport_check,
    mass_transport_reports,
    theorem2_constant_c4,
    theorem3_lower_check,
    theorem3_lower_constant,
    theorem3_upper_check,
    theorem3_upper_constant,
    trace_fidelity_reports,
)
from bounds import BoundId, TailParams
from errors import FamilyMismatchError, FitUnreliableError, InsufficientDataError, InvalidArgumentError
from graph_core import grid_graph
from percolation import ClusterSample, Family, PercolationModel, preset, sample_cluster
from spectral import drw_kernel, exact_spectrum, return_probabilities

TREE = PercolationModel(Family.HOMOGENEOUS_TREE, delta=3, p=0.3, size_cap=5000, seed=1)
LATTICE = PercolationModel(Family.SQUARE_LATTICE_2D, delta=4, p=0.3, size_cap=5000, seed=2)


def synthetic_estimate(model, t_grid, gap, gap_error, kappa=0.1, censored_fraction=0.0):
    t_grid = np.asarray(t_grid, dtype=float)
    gap = np.asarray(gap, dtype=float)
    n = 100
    censored = np.zeros(n, dtype=bool)
    censored[:int(round(censored_fraction * n))] = True
    return AnnealedEstimate(
        model=model,
        t_grid=t_grid,
        n_samples=n,
        p_t_hat=gap + kappa,
        std_error=np.asarray(gap_error, dtype=float),
        gap_hat=gap,
        gap_std_error=np.asarray(gap_error, dtype=float),
        kappa_hat=kappa,
        kappa_std_error=0.001,
        chi_hat=3.0,
        chi_std_error=0.1,
        censored_fraction=float(censored.mean()),
        sizes=np.full(n, 4, dtype=np.int64),
        censored=censored,
    )


def test_cluster_traces_closed_forms():
    times = np.array([0.0, 1.0, 5.0])
    single = ClusterSample(graph=grid_graph(1, 1), root=0, censored=False)
    trace, root = cluster_traces(single, TREE, times, 0)
    np.testing.assert_array_equal(trace, 1.0)
    pair = ClusterSample(graph=grid_graph(1, 2), root=0, censored=False)
    trace, _ = cluster_traces(pair, TREE, times, 0)
    exact = return_probabilities(exact_spectrum(drw_kernel(pair.graph, 3)), times)
    np.testing.assert_allclose(trace, exact, atol=1e-12)
    censored = ClusterSample(graph=grid_graph(2, 2), root=0, censored=True)
    np.testing.assert_array_equal(cluster_traces(censored, TREE, times, 0)[0], 0.0)


def test_cluster_traces_stochastic_path_matches_dense():
    sample = ClusterSample(graph=grid_graph(9, 9), root=40, censored=False)
    times = np.array([1.0, 4.0])
    dense_trace, dense_root = cluster_traces(sample, LATTICE, times, 0, dense_cap=3000, fixed_root=True)
    sparse_trace, sparse_root = cluster_traces(sample, LATTICE, times, 0, dense_cap=10, probes=400, fixed_root=True)
    np.testing.assert_allclose(sparse_trace, dense_trace, atol=0.02)
    np.testing.assert_allclose(sparse_root, dense_root, atol=1e-10)


def test_campaign_basic_identities():
    est = annealed_campaign(TREE, [0.0, 1.0, 10.0, 100.0], 300, workers=2)
    assert est.p_t_hat[0] == pytest.approx(1.0)
    assert est.kappa_hat == pytest.approx(np.mean(1.0 / est.sizes))
    assert np.all(np.diff(est.p_t_hat) <= 1e-12)
    assert np.all(est.p_t_hat >= est.kappa_hat - 1e-12)
    assert est.censored_fraction == 0.0 and est.chi_reliable and not est.use_envelope
    assert not est.fixed_root
    assert len(est.rows()) == 4 and len(est.rows()[0]) == len(CAMPAIGN_COLUMNS)


def test_campaign_is_independent_of_worker_count():
    one = annealed_campaign(LATTICE, [1.0, 10.0], 120, workers=1)
    many = annealed_campaign(LATTICE, [1.0, 10.0], 120, workers=5)
    np.testing.assert_array_equal(one.p_t_hat, many.p_t_hat)
    assert one.kappa_hat == many.kappa_hat


def test_campaign_sizes_match_sampler():
    est = annealed_campaign(LATTICE, [1.0], 40, workers=3)
    expected = [sample_cluster(LATTICE, index).size for index in range(40)]
    assert est.sizes.tolist() == expected


def test_campaign_rejects_bad_grid():
    with pytest.raises(InvalidArgumentError):
        annealed_campaign(TREE, [5.0, 1.0], 10)
    with pytest.raises(InvalidArgumentError):
        annealed_campaign(TREE, [1.0], 0)


def test_censoring_envelope_and_moment():
    capped = TREE.with_overrides(p=0.5, size_cap=5)
    est = annealed_campaign(capped, [1.0, 10.0], 200, workers=2)
    assert est.censored_fraction > 0.0 and not est.chi_reliable
    np.testing.assert_allclose(est.p_t_upper, np.minimum(est.p_t_hat + est.censored_fraction, 1.0))
    sizes = np.where(est.censored, 5, est.sizes)
    assert est.size_moment(0.5) == pytest.approx(np.mean(sizes ** 0.5))


def test_mass_transport_identity_on_both_families():
    for model in (TREE, LATTICE):
        est = annealed_campaign(model, [0.5, 2.0, 8.0], 400, fixed_root=True, workers=2)
        reports = mass_transport_reports(est)
        assert len(reports) == 3
        assert all(report.satisfied for report in reports)
    assert mass_transport_check(TREE, 1.0, 100).bound_id is BoundId.MASS_TRANSPORT
    with pytest.raises(InvalidArgumentError):
        mass_transport_reports(annealed_campaign(TREE, [1.0], 10))


def test_theorem3_upper_check():
    assert theorem3_upper_constant(4) == 27.0 * 4 * 6
    assert theorem2_constant_c4() == pytest.approx(11.06998, abs=1e-5)
    est = synthetic_estimate(LATTICE, [0.0, 1.0, 1e6], [0.9, 0.5, 1e-4], [0.01, 0.01, 1e-5])
    reports = theorem3_upper_check(est, 4, 0.1, moment_hat=1.5, b=0.2)
    assert len(reports) == 2
    assert reports[0].note and all(report.satisfied for report in reports)
    with pytest.raises(InvalidArgumentError):
        theorem3_upper_check(est, 4, 0.3, moment_hat=1.5, b=0.2)


def test_theorem3_lower_check():
    tail = TailParams(A=0.5, B=1.0, a=0.1, b=0.1)
    constant = theorem3_lower_constant(4, tail)
    expected = math.exp(-48.0 * math.sqrt(2.0)) * 0.25 / (1.0 + 4.0 ** 10)
    assert constant == pytest.approx(expected)
    est = synthetic_estimate(LATTICE, [1.0, 100.0, 1000.0], [0.5, 0.05, 0.01], [0.01, 0.001, 0.001])
    reports = theorem3_lower_check(est, 4, tail)
    assert [report.inputs["t"] for report in reports] == [100.0, 1000.0]
    assert all(report.satisfied and report.note == "vacuous margin" for report in reports)
    tree_est = synthetic_estimate(TREE, [100.0], [0.1], [0.01])
    with pytest.raises(FamilyMismatchError):
        theorem3_lower_check(tree_est, 3, tail)


def test_decay_fit_recovers_exponent():
    times = np.geomspace(1.0, 1000.0, 10)
    gap = 2.0 * times ** -0.75
    est = synthetic_estimate(TREE, times, gap, gap * 0.01)
    fit = fit_decay_exponent(est)
    assert fit.exponent == pytest.approx(0.75, abs=1e-9)
    assert fit.n_points == 10
    reports = corollary1_exponent_check(fit, Family.HOMOGENEOUS_TREE)
    assert [report.satisfied for report in reports] == [True, True]


def test_decay_fit_needs_significant_points():
    times = np.array([1.0, 10.0, 100.0])
    est = synthetic_estimate(TREE, times, [0.1, 0.001, 1e-5], [0.001, 0.001, 0.001])
    with pytest.raises(InsufficientDataError):
        fit_decay_exponent(est)


def test_corollary1_brackets_and_reliability():
    assert corollary1_bracket(Family.HOMOGENEOUS_TREE) == pytest.approx((0.6, 3.3))
    low, high = corollary1_bracket(Family.SQUARE_LATTICE_2D, 0.1)
    assert low == pytest.approx(0.4) and high == pytest.approx(11.3)
    with pytest.raises(InvalidArgumentError):
        corollary1_bracket(Family.SQUARE_LATTICE_2D, 0.3)
    shaky = ExponentFit(exponent=0.5, window=(1.0, 100.0), stderr=0.2, r_squared=0.5, n_points=5)
    with pytest.raises(FitUnreliableError):
        corollary1_exponent_check(shaky, Family.SQUARE_LATTICE_2D)
    steep = ExponentFit(exponent=12.0, window=(1.0, 100.0), stderr=0.2, r_squared=0.99, n_points=5)
    assert [r.satisfied for r in corollary1_exponent_check(steep, Family.SQUARE_LATTICE_2D)] == [True, False]


def test_kappa_sandwich_on_subcritical_lattice():
    assert kappa_sandwich_constant(2) == 7.0
    est = annealed_campaign(LATTICE, [1.0, 10.0, 100.0, 1000.0], 300, workers=2)
    reports = kappa_sandwich_check(est) + kappa_poincare_check(est)
    assert len(reports) == 12
    assert all(report.satisfied for report in reports)
    with pytest.raises(FamilyMismatchError):
        kappa_sandwich_check(synthetic_estimate(preset("z2-critical"), [1.0], [0.1], [0.01]))


def test_box_count_extremes_and_agreement():
    closed = grimmett_kappa_boxcount(LATTICE.with_overrides(p=0.0), L=3, n_realizations=2)
    assert closed.value == pytest.approx(1.0) and closed.std_error == 0.0
    full = grimmett_kappa_boxcount(LATTICE.with_overrides(p=1.0), L=3, n_realizations=1)
    assert full.value == pytest.approx(1.0 / 36.0)
    with pytest.raises(FamilyMismatchError):
        grimmett_kappa_boxcount(TREE, L=3, n_realizations=2)
    est = synthetic_estimate(LATTICE, [1.0], [0.1], [0.01], kappa=0.2)
    report = kappa_agreement_report(est, full)
    assert report.bound_id is BoundId.KAPPA_BOX_AGREEMENT and not report.satisfied


def test_trace_fidelity_reports():
    reports = trace_fidelity_reports(drw_kernel(grid_graph(10, 10), 4), [1.0, 5.0, 25.0], probes=128, seed=4)
    assert len(reports) == 3
    assert all(report.satisfied for report in reports)


@pytest.mark.slow
def test_critical_tree_decay_exponent_in_bracket():
    model = preset("tree-critical").with_overrides(size_cap=20000, seed=0)
    est = annealed_campaign(model, np.geomspace(10.0, 1000.0, 13), 20000, workers=8)
    fit = fit_decay_exponent(est, (10.0, 1000.0))
    reports = corollary1_exponent_check(fit, Family.HOMOGENEOUS_TREE)
    assert len(reports) == 2
    assert all(report.satisfied for report in reports)


@pytest.mark.slow
def test_kappa_sandwich_and_box_count_agree_at_p_03():
    model = LATTICE.with_overrides(seed=0)
    est = annealed_campaign(model, [10.0, 100.0, 1000.0], 20000, workers=8)
    assert all(report.satisfied for report in kappa_sandwich_check(est, d=2))
    box = grimmett_kappa_boxcount(model, L=512, n_realizations=4, workers=8)
    assert kappa_agreement_report(est, box).satisfied


@pytest.mark.slow
def test_mass_transport_identity_at_full_sample_count():
    lattice = PercolationModel(Family.SQUARE_LATTICE_2D, delta=4, p=0.25, size_cap=5000, seed=0)
    for model in (preset("tree-critical").with_overrides(size_cap=5000, seed=0), lattice):
        est = annealed_campaign(model, [2.0, 5.0, 20.0], 10 ** 5, fixed_root=True, workers=8)
        reports = mass_transport_reports(est)
        assert len(reports) == 3
        assert all(report.satisfied for report in reports)
