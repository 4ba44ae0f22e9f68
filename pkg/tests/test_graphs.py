"""Clique graph construction and symmetric normalization."""

import numpy as np
import pytest

from c2m import graphs
from c2m.errors import ShapeMismatchError


def random_clustering(rng, n, d=2, k=4):
    return rng.standard_normal((n, d)), rng.integers(0, k, size=n)


class TestBuildGraph:
    def test_two_plus_singleton(self):
        g = graphs.build_graph(np.zeros((3, 2)), np.array([0, 0, 1]))
        np.testing.assert_array_equal(g.adjacency,
                                      [[0, 1, 0], [1, 0, 0], [0, 0, 0]])

    def test_single_clique_is_complete(self):
        g = graphs.build_graph(np.zeros((3, 2)), np.array([5, 5, 5]))
        assert graphs.edge_count(g) == 6
        np.testing.assert_array_equal(np.diag(g.adjacency), np.zeros(3))

    def test_all_distinct_labels_gives_empty_graph(self):
        g = graphs.build_graph(np.zeros((4, 2)), np.arange(4))
        np.testing.assert_array_equal(g.adjacency, np.zeros((4, 4)))

    def test_length_mismatch_rejected(self):
        with pytest.raises(ShapeMismatchError):
            graphs.build_graph(np.zeros((3, 2)), np.array([0, 1]))

    def test_label_permutation_invariance_exact(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            x, y = random_clustering(rng, 30)
            perm = rng.permutation(10)
            g1 = graphs.build_graph(x, y)
            g2 = graphs.build_graph(x, perm[y])
            np.testing.assert_array_equal(g1.adjacency, g2.adjacency)

    def test_symmetry_and_edge_count_formula(self):
        rng = np.random.default_rng(1)
        for _ in range(25):
            x, y = random_clustering(rng, 40, k=6)
            g = graphs.build_graph(x, y)
            np.testing.assert_array_equal(g.adjacency, g.adjacency.T)
            _, counts = np.unique(y, return_counts=True)
            assert graphs.edge_count(g) == int((counts * (counts - 1)).sum())

    def test_features_copied_untouched(self):
        x = np.arange(8, dtype=float).reshape(4, 2)
        g = graphs.build_graph(x, np.array([0, 1, 0, 1]))
        np.testing.assert_array_equal(g.features, x)


class TestNormalize:
    def test_isolated_nodes_give_identity(self):
        g = graphs.build_graph(np.zeros((2, 2)), np.array([0, 1]))
        np.testing.assert_array_equal(graphs.normalize(g), np.eye(2))

    def test_two_node_clique_hand_computed(self):
        # A + I = all-ones 2x2; degrees 2; D^{-1/2}(A+I)D^{-1/2} = 0.5 everywhere
        g = graphs.build_graph(np.zeros((2, 2)), np.array([0, 0]))
        np.testing.assert_allclose(graphs.normalize(g), np.full((2, 2), 0.5))

    def test_block_value_is_inverse_cluster_size(self):
        y = np.array([0, 0, 0, 1, 1])
        g = graphs.build_graph(np.zeros((5, 2)), y)
        a_norm = graphs.normalize(g)
        np.testing.assert_allclose(a_norm[:3, :3], np.full((3, 3), 1 / 3))
        np.testing.assert_allclose(a_norm[3:, 3:], np.full((2, 2), 1 / 2))
        np.testing.assert_allclose(a_norm[:3, 3:], np.zeros((3, 2)))

    def test_output_symmetric(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            x, y = random_clustering(rng, 25)
            a_norm = graphs.normalize(graphs.build_graph(x, y))
            np.testing.assert_allclose(a_norm, a_norm.T)
            assert a_norm.min() >= 0.0
            assert a_norm.max() <= 1.0
