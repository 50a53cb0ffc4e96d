"""Shared fixtures and random-graph helpers for the test suite."""

import itertools

import numpy as np
import pytest

from graphboost import LabeledGraph, generate_xor


def random_connected_graph(
    rng: np.random.RandomState,
    max_nodes: int = 5,
    n_node_labels: int = 3,
    n_edge_labels: int = 2,
    extra_edge_p: float = 0.3,
) -> LabeledGraph:
    """A connected labeled graph: random spanning tree plus random extra edges."""
    n = int(rng.randint(1, max_nodes + 1))
    labels = tuple(int(v) for v in rng.randint(0, n_node_labels, size=n))
    edges = []
    present = set()
    for v in range(1, n):
        u = int(rng.randint(0, v))
        edges.append((u, v, int(rng.randint(0, n_edge_labels))))
        present.add((u, v))
    for u, v in itertools.combinations(range(n), 2):
        if (u, v) not in present and rng.random_sample() < extra_edge_p:
            edges.append((u, v, int(rng.randint(0, n_edge_labels))))
    return LabeledGraph(node_labels=labels, edges=tuple(edges))


def random_graph_set(
    rng: np.random.RandomState,
    n_graphs: int,
    max_nodes: int = 5,
    n_node_labels: int = 3,
    n_edge_labels: int = 2,
) -> list[LabeledGraph]:
    return [
        random_connected_graph(rng, max_nodes, n_node_labels, n_edge_labels)
        for _ in range(n_graphs)
    ]


def path_graph(node_labels, edge_labels=None) -> LabeledGraph:
    """A path with the given node labels; edge labels default to 0."""
    if edge_labels is None:
        edge_labels = [0] * (len(node_labels) - 1)
    edges = tuple((i, i + 1, el) for i, el in enumerate(edge_labels))
    return LabeledGraph(node_labels=tuple(node_labels), edges=edges)


def brute_force_contains(graph: LabeledGraph, pattern: LabeledGraph) -> bool:
    """Subgraph containment by trying every injective vertex mapping."""
    if pattern.n_nodes > graph.n_nodes:
        return False
    for perm in itertools.permutations(range(graph.n_nodes), pattern.n_nodes):
        if any(
            graph.node_labels[perm[i]] != lab for i, lab in enumerate(pattern.node_labels)
        ):
            continue
        if all(graph.edge_label(perm[u], perm[v]) == el for u, v, el in pattern.edges):
            return True
    return False


def brute_force_isomorphic(a: LabeledGraph, b: LabeledGraph) -> bool:
    """Exact isomorphism: equal sizes plus an injective edge-preserving map."""
    if a.n_nodes != b.n_nodes or a.n_edges != b.n_edges:
        return False
    if sorted(a.node_labels) != sorted(b.node_labels):
        return False
    # with equal node and edge counts a monomorphism is an isomorphism
    return brute_force_contains(a, b)


@pytest.fixture(scope="session")
def xor_dataset():
    return generate_xor()
