"""Тесты графового представления форм."""

import numpy as np

from src.features.forms import build_form
from src.features.graph_builder import (
    build_form_graph,
    connected_components,
    cross_edges,
    graph_statistics,
    path_graph_form,
)


def test_graph_attributes(mixed_form):
    G = build_form_graph(mixed_form)
    assert G.number_of_nodes() == 5
    assert G.number_of_edges() == 3
    assert G.nodes[4]["killing"] == 0.25
    assert G.nodes[1]["measure"] == 0.5
    assert G[0][1]["weight"] == 2.0


def test_components_are_ordered(mixed_form):
    assert connected_components(mixed_form) == [(0, 1), (2, 3, 4)]


def test_interleaved_components_and_isolated_vertex():
    weights = np.zeros((5, 5))
    weights[0, 3] = weights[3, 0] = weights[1, 4] = weights[4, 1] = 1.0
    form = build_form(weights, np.zeros(5), np.ones(5))
    np.testing.assert_array_equal(form.component_labels(), [0, 1, 2, 0, 1])
    assert connected_components(form) == [(0, 3), (1, 4), (2,)]


def test_cross_edges_point_outward(mixed_form):
    assert cross_edges(mixed_form, (0, 1)) == []
    assert cross_edges(mixed_form, (2, 3)) == [(3, 4, 0.5)]


def test_statistics(mixed_form):
    stats = graph_statistics(mixed_form)
    assert stats["components"] == 2
    assert stats["killed_nodes"] == 1
    assert stats["total_measure"] == 5.5


def test_path_graph_form():
    form = path_graph_form(5, 20.0, 0.05, killing={2: 7.0}, labels=["a", "b", "c", "d", "e"])
    assert form.n == 5
    np.testing.assert_allclose(form.measure, 0.05)
    assert form.killing[2] == 7.0
    assert form.weights[0, 1] == 20.0
    assert form.weights[0, 2] == 0.0
    assert form.labels == ("a", "b", "c", "d", "e")
