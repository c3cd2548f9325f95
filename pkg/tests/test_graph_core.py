import networkx as nx
import pytest

from errors import InvalidArgumentError
from graph_core import (
    FiniteGraph,
    VertexSubset,
    cartesian_product,
    complete_graph,
    connected_component,
    cycle_graph,
    dump_graph,
    edge_boundary,
    grid_graph,
    induced_subgraph,
    is_connected,
    load_graph,
    path_graph,
)


def test_from_edges_is_canonical():
    g = FiniteGraph.from_edges(4, [(3, 1), (0, 1), (1, 0), (2, 3)])
    assert g.edges == ((0, 1), (1, 3), (2, 3))
    assert g.adjacency[1] == (0, 3)
    assert g.degrees.tolist() == [1, 2, 1, 2]
    assert g.has_edge(3, 1) and not g.has_edge(0, 2)


@pytest.mark.parametrize("n,edges", [(0, []), (3, [(1, 1)]), (3, [(0, 3)])])
def test_from_edges_rejects_invalid_input(n, edges):
    with pytest.raises(InvalidArgumentError):
        FiniteGraph.from_edges(n, edges)


def test_constructions_match_networkx():
    assert cycle_graph(5).m == nx.cycle_graph(5).number_of_edges()
    assert path_graph(6).m == 5
    assert complete_graph(5).m == 10
    grid = grid_graph(3, 4)
    reference = nx.grid_2d_graph(3, 4)
    assert grid.m == reference.number_of_edges()
    assert sorted(grid.degrees.tolist()) == sorted(d for _, d in reference.degree())


def test_cycle_needs_three_vertices():
    with pytest.raises(InvalidArgumentError):
        cycle_graph(2)


def test_complete_graph_degrees_and_minimum_size():
    k6 = complete_graph(6)
    assert k6.degrees.tolist() == [5] * 6 and k6.m == 15
    assert complete_graph(1).m == 0
    with pytest.raises(InvalidArgumentError):
        complete_graph(0)


def test_cartesian_product_edge_count():
    g, h = cycle_graph(4), path_graph(3)
    product = cartesian_product(g, h)
    assert product.n == 12
    assert product.m == g.n * h.m + h.n * g.m
    reference = nx.cartesian_product(nx.cycle_graph(4), nx.path_graph(3))
    assert product.m == reference.number_of_edges()


def test_induced_subgraph_relabels_in_order():
    g = cycle_graph(6)
    sub, relabel = induced_subgraph(g, VertexSubset.of(g, [5, 0, 1, 3]))
    assert relabel == {0: 0, 1: 1, 3: 2, 5: 3}
    assert sub.edges == ((0, 1), (0, 3))


def test_components_and_boundary():
    g = FiniteGraph.from_edges(5, [(0, 1), (1, 2), (3, 4)])
    assert connected_component(g, 4).sorted() == [3, 4]
    assert not is_connected(g)
    assert is_connected(cycle_graph(7))
    assert edge_boundary(cycle_graph(6), VertexSubset.of(cycle_graph(6), [0, 1, 2])) == 2
    assert len(VertexSubset.of(g, [0, 1]).complement()) == 3


def test_dump_and_load_with_coordinates():
    g = grid_graph(2, 2)
    coordinates = [(0, 0), (1, 0), (0, 1), (1, 1)]
    text = dump_graph(g, coordinates)
    assert text.splitlines()[0] == "4 4"
    loaded, loaded_coordinates = load_graph(text)
    assert loaded.edges == g.edges
    assert loaded_coordinates == coordinates
    assert load_graph(dump_graph(g))[1] is None


def test_load_graph_rejects_truncated_dump():
    with pytest.raises(InvalidArgumentError):
        load_graph("3 2\n0 1\n")
