import networkx as nx
import numpy as np
import pytest

from bounds import BoundId
from errors import InvalidArgumentError
from graph_core import is_connected
from percolation import (
    Family,
    HomogeneousTreeSampler,
    PercolationModel,
    SquareLatticeSampler,
    box_components,
    box_configuration,
    box_edges,
    default_m_grid,
    preset,
    sample_cluster,
    sampler_for,
    tail_from_sizes,
    tail_slope_reports,
    tail_survey,
)
from percolation.tail_survey import survival_from_sizes, wilson_interval


def test_model_validation_and_criticality():
    tree = PercolationModel(Family.HOMOGENEOUS_TREE, delta=3, p=0.5)
    assert tree.critical_p == pytest.approx(0.5) and tree.is_critical and not tree.is_planar
    lattice = PercolationModel("square_lattice_2d", delta=4, p=0.3)
    assert lattice.family is Family.SQUARE_LATTICE_2D and lattice.is_subcritical and lattice.is_planar
    with pytest.raises(InvalidArgumentError):
        PercolationModel(Family.SQUARE_LATTICE_2D, delta=3, p=0.5)
    with pytest.raises(InvalidArgumentError):
        PercolationModel(Family.HOMOGENEOUS_TREE, delta=2, p=0.5)
    with pytest.raises(InvalidArgumentError):
        PercolationModel(Family.HOMOGENEOUS_TREE, delta=3, p=1.5)


def test_presets():
    model = preset("z2-subcritical", size_cap=100)
    assert model.family is Family.SQUARE_LATTICE_2D and model.p == 0.3 and model.size_cap == 100
    assert preset("tree-critical").is_critical
    with pytest.raises(InvalidArgumentError):
        preset("cubic-lattice")


def test_sampler_registry():
    assert isinstance(sampler_for(preset("z2-critical")), SquareLatticeSampler)
    assert isinstance(sampler_for(preset("tree-critical")), HomogeneousTreeSampler)
    assert not SquareLatticeSampler().supports(preset("tree-critical"))


def test_lattice_cluster_is_connected_lattice_subgraph():
    model = PercolationModel(Family.SQUARE_LATTICE_2D, delta=4, p=0.5, size_cap=5000, seed=9)
    for index in range(20):
        sample = sample_cluster(model, index)
        assert sample.coordinates[0] == (0, 0)
        assert len(set(sample.coordinates)) == sample.size
        assert is_connected(sample.graph)
        assert sample.graph.max_degree <= 4
        for u, v in sample.graph.edges:
            (x1, y1), (x2, y2) = sample.coordinates[u], sample.coordinates[v]
            assert abs(x1 - x2) + abs(y1 - y2) == 1


def test_lattice_extremes_and_censoring():
    closed = PercolationModel(Family.SQUARE_LATTICE_2D, delta=4, p=0.0)
    assert SquareLatticeSampler().sample_size(closed, 0) == (1, False)
    full = PercolationModel(Family.SQUARE_LATTICE_2D, delta=4, p=1.0, size_cap=50)
    sample = sample_cluster(full, 0)
    assert sample.size == 50 and sample.censored


def test_sampling_is_deterministic_per_stream():
    model = PercolationModel(Family.SQUARE_LATTICE_2D, delta=4, p=0.5, seed=4)
    first, again = sample_cluster(model, 17), sample_cluster(model, 17)
    assert first.graph.edges == again.graph.edges
    assert SquareLatticeSampler().sample_size(model, 17) == (first.size, first.censored)


def test_tree_cluster_shape():
    model = PercolationModel(Family.HOMOGENEOUS_TREE, delta=4, p=0.3, seed=2)
    sampler = HomogeneousTreeSampler()
    for index in range(30):
        sample = sampler.sample_cluster(model, index)
        assert sample.graph.m == sample.size - 1
        assert is_connected(sample.graph)
        assert sample.graph.degree(0) <= 4
        assert sample.graph.max_degree <= 4
        assert sampler.sample_size(model, index) == (sample.size, sample.censored)


def test_tree_censoring():
    full = PercolationModel(Family.HOMOGENEOUS_TREE, delta=3, p=1.0, size_cap=10)
    sample = HomogeneousTreeSampler().sample_cluster(full, 0)
    assert sample.size == 10 and sample.censored
    closed = PercolationModel(Family.HOMOGENEOUS_TREE, delta=3, p=0.0)
    assert HomogeneousTreeSampler().sample_size(closed, 0) == (1, False)


def test_subcritical_tree_mean_size():
    model = PercolationModel(Family.HOMOGENEOUS_TREE, delta=3, p=0.3, seed=1)
    sampler = HomogeneousTreeSampler()
    sizes = [sampler.sample_size(model, index)[0] for index in range(4000)]
    expected = 1.0 + 3 * 0.3 / (1.0 - 2 * 0.3)
    assert np.mean(sizes) == pytest.approx(expected, abs=0.3)


def test_box_configuration_shapes_and_extremes():
    horizontal, vertical = box_configuration(0.5, 3, seed=1, index=0)
    assert horizontal.shape == (6, 5) and vertical.shape == (5, 6)
    open_h, open_v = box_configuration(1.0, 3, seed=1, index=0)
    assert len(box_edges(open_h, open_v)) == 2 * 6 * 5
    assert box_components(open_h, open_v)[0] == 1
    closed_h, closed_v = box_configuration(0.0, 3, seed=1, index=0)
    assert box_components(closed_h, closed_v)[0] == 36
    with pytest.raises(InvalidArgumentError):
        box_configuration(0.5, 0, seed=1, index=0)


def test_box_components_match_networkx():
    horizontal, vertical = box_configuration(0.45, 5, seed=3, index=2)
    count, labels = box_components(horizontal, vertical)
    reference = nx.Graph()
    reference.add_nodes_from(range(100))
    reference.add_edges_from(box_edges(horizontal, vertical).tolist())
    assert count == nx.number_connected_components(reference)
    assert labels.shape == (100,)


def test_survival_counts_censored_samples_as_large():
    sizes = np.array([1, 2, 3, 5])
    censored = np.array([False, False, False, True])
    np.testing.assert_allclose(survival_from_sizes(sizes, censored, [1, 2, 4, 10]), [1.0, 0.75, 0.25, 0.25])


def test_wilson_interval_brackets_estimate():
    low, high = wilson_interval(np.array([0.0, 30.0, 100.0]), 100)
    assert low[0] == pytest.approx(0.0, abs=1e-12) and high[0] > 0.0
    assert low[1] < 0.3 < high[1]
    assert high[2] == pytest.approx(1.0) and low[2] < 1.0


def test_tail_from_sizes_recovers_slope():
    rng = np.random.default_rng(0)
    sizes = np.floor(rng.random(20000) ** -2.0).astype(np.int64)
    estimate = tail_from_sizes(sizes, np.zeros(sizes.size, dtype=bool), default_m_grid(1, 100, 15))
    assert estimate.slope == pytest.approx(0.5, abs=0.05)
    assert not estimate.poor_fit
    params = estimate.tail_params()
    assert params.a == params.b == estimate.slope
    assert params.A <= params.B
    assert len(estimate.rows()) == len(estimate.m_grid)


def test_tail_window_must_lie_in_grid():
    sizes = np.array([1, 2, 3])
    with pytest.raises(InvalidArgumentError):
        tail_from_sizes(sizes, np.zeros(3, dtype=bool), [1, 2, 3], window=(1.0, 10.0))


def test_tail_survey_is_independent_of_worker_count():
    model = PercolationModel(Family.HOMOGENEOUS_TREE, delta=3, p=0.5, size_cap=2000, seed=5)
    grid = default_m_grid(1, 200, 10)
    one = tail_survey(model, 600, grid, workers=1)
    many = tail_survey(model, 600, grid, workers=4)
    np.testing.assert_array_equal(one.phi_hat, many.phi_hat)
    assert one.n_samples == 600
    with pytest.raises(InvalidArgumentError):
        tail_survey(model, 0, grid)


def test_tail_slope_reports_judge_critical_models_only():
    rng = np.random.default_rng(0)
    sizes = np.floor(rng.random(20000) ** -2.0).astype(np.int64)
    estimate = tail_from_sizes(sizes, np.zeros(sizes.size, dtype=bool), default_m_grid(1, 100, 15))
    tree = PercolationModel(Family.HOMOGENEOUS_TREE, delta=3, p=0.5)
    reports = tail_slope_reports(estimate, tree)
    assert [report.bound_id for report in reports] == [BoundId.TAIL_SLOPE, BoundId.TAIL_SLOPE]
    assert all(report.satisfied for report in reports)
    lattice = PercolationModel(Family.SQUARE_LATTICE_2D, delta=4, p=0.5)
    assert not all(report.satisfied for report in tail_slope_reports(estimate, lattice))
    assert tail_slope_reports(estimate, PercolationModel(Family.HOMOGENEOUS_TREE, delta=3, p=0.3)) == []


@pytest.mark.slow
def test_critical_tree_tail_slope_from_a_million_clusters():
    model = PercolationModel(Family.HOMOGENEOUS_TREE, delta=3, p=0.5, size_cap=10 ** 5, seed=0)
    estimate = tail_survey(model, 10 ** 6, default_m_grid(1, 10 ** 4, 31), (10.0, 10 ** 4), workers=8)
    assert estimate.slope == pytest.approx(0.5, abs=0.1)
    assert all(report.satisfied for report in tail_slope_reports(estimate, model))
