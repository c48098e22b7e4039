"""
Модуль для построения графового представления форм.

Строит networkx-граф формы (веса ребер, убивание и мера как атрибуты вершин),
находит компоненты связности и собирает формы на путевых графах для
дискретизированных одномерных примеров.
"""

from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import scipy.sparse as sp

from src.features.forms import FiniteDirichletForm, build_form


def build_form_graph(form: FiniteDirichletForm) -> nx.Graph:
    """
    Строит неориентированный граф формы.

    :param form: Форма Дирихле
    :return: Граф с атрибутами вершин killing, measure, label и весами ребер weight
    """
    G = nx.Graph()
    for i in range(form.n):
        G.add_node(
            i,
            killing=float(form.killing[i]),
            measure=float(form.measure[i]),
            label=form.labels[i] if form.labels else str(i),
        )
    rows, cols, data = form.edge_list()
    G.add_weighted_edges_from(
        (int(i), int(j), float(w)) for i, j, w in zip(rows, cols, data) if w > 0
    )
    return G


def connected_components(form: FiniteDirichletForm) -> List[Tuple[int, ...]]:
    """
    Компоненты связности графа {(i, j): w_ij > 0}.

    Порядок детерминирован: вершины внутри компоненты по возрастанию,
    компоненты по наименьшей вершине.
    """
    labels = form.component_labels()
    return [tuple(np.flatnonzero(labels == k).tolist()) for k in range(labels.max(initial=-1) + 1)]


def cross_edges(form: FiniteDirichletForm, subset: Iterable[int]) -> List[Tuple[int, int, float]]:
    """Ребра с положительным весом между subset и его дополнением."""
    inside = set(int(i) for i in subset)
    G = build_form_graph(form)
    edges = []
    for i, j, data in G.edges(data=True):
        if (i in inside) != (j in inside):
            a, b = (i, j) if i in inside else (j, i)
            edges.append((a, b, data["weight"]))
    return sorted(edges)


def graph_statistics(form: FiniteDirichletForm) -> Dict[str, float]:
    """Сводка по графу формы для отчетов."""
    G = build_form_graph(form)
    return {
        "nodes": G.number_of_nodes(),
        "edges": G.number_of_edges(),
        "components": nx.number_connected_components(G) if G.number_of_nodes() else 0,
        "killed_nodes": int(np.count_nonzero(form.killing)),
        "total_measure": float(form.measure.sum()),
    }


def path_graph_form(
    n: int,
    edge_weight: float,
    node_measure: float,
    killing: Optional[Dict[int, float]] = None,
    labels: Optional[Sequence[str]] = None,
) -> FiniteDirichletForm:
    """
    Форма на путевом графе 0 — 1 — … — n−1.

    :param n: Число вершин
    :param edge_weight: Вес каждого ребра (для сетки с шагом h это 1/h)
    :param node_measure: Мера каждой вершины (для сетки это h)
    :param killing: Словарь {вершина: убивание}
    :param labels: Подписи вершин (например, координаты узлов)
    :return: FiniteDirichletForm
    """
    G = nx.path_graph(n)
    nx.set_edge_attributes(G, float(edge_weight), "weight")
    weights = nx.to_scipy_sparse_array(G, nodelist=range(n), weight="weight", format="csr")
    killing_vector = np.zeros(n)
    for node, value in (killing or {}).items():
        killing_vector[node] = value
    return build_form(sp.csr_matrix(weights), killing_vector, np.full(n, float(node_measure)), labels=labels)
