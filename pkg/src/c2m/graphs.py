"""Clique graphs over clustered datasets and their symmetric normalization.

A clustered dataset (X, y) becomes a graph whose nodes are the points and
whose edges connect exactly the same-cluster pairs, so each cluster is a
complete subgraph.  Because the adjacency depends on y only through the
partition it induces, relabeling clusters leaves the graph unchanged; this is
what makes everything built on top of it label-permutation invariant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatchError


@dataclass
class ClusterGraph:
    """Dense clique-structured adjacency plus the node feature matrix.

    ``adjacency[i, j] == 1`` iff points i and j share a cluster and i != j.
    ``labels`` records the partition the graph was built from; it carries no
    information beyond the adjacency but keeps grouped computations cheap.
    """

    features: np.ndarray
    adjacency: np.ndarray
    labels: np.ndarray

    @property
    def n(self) -> int:
        return self.features.shape[0]


def build_graph(x: np.ndarray, y: np.ndarray) -> ClusterGraph:
    """Union of complete subgraphs, one per distinct label; features copied as-is."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    if y.ndim != 1 or x.ndim != 2 or y.shape[0] != x.shape[0]:
        raise ShapeMismatchError(
            f"points {x.shape} and labels {y.shape} do not match")
    adjacency = (y[:, None] == y[None, :]).astype(np.float64)
    np.fill_diagonal(adjacency, 0.0)
    return ClusterGraph(features=x, adjacency=adjacency, labels=y.astype(np.int64))


def normalize(g: ClusterGraph) -> np.ndarray:
    """Symmetrically normalized adjacency D^{-1/2} (A + I) D^{-1/2}.

    Self-loops are injected here (not stored in the graph), so every degree is
    at least 1 and the result is well defined for isolated nodes.
    """
    a_hat = g.adjacency + np.eye(g.n)
    inv_sqrt_deg = 1.0 / np.sqrt(a_hat.sum(axis=1))
    return a_hat * inv_sqrt_deg[:, None] * inv_sqrt_deg[None, :]


def edge_count(g: ClusterGraph) -> int:
    """Number of directed edges; equals sum over clusters of n_c * (n_c - 1)."""
    return int(g.adjacency.sum())
