"""Two-layer graph-convolutional autoencoder and the pooled dataset embedding.

The encoder is ReLU(A_norm X W0) followed by A_norm X_bar W1 (no biases); the
decoder reconstructs the adjacency as sigmoid(Z Z^T).  Node embeddings Z are
pooled into a fixed-length dataset embedding by taking Z^T Z and flattening
its upper triangle, which removes any dependence on the number of points and
on their order.

Training minimises the positively reweighted binary cross-entropy between the
reconstruction and A + I, over graphs built from both ground-truth labelings
and random labelings of the same point sets, so the encoder must tell
geometrically coherent cliques apart from arbitrary ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics
from .datasets import Corpus, MAX_CLUSTERS, MIN_CLUSTERS
from .errors import NonFiniteError, ShapeMismatchError
from .graphs import ClusterGraph, build_graph, normalize
from .numerics import ParameterSet, RmspropState, relu, rmsprop_step, sigmoid


@dataclass
class GaeModel:
    """Encoder weights: w0 maps features to the hidden layer, w1 to the embedding."""

    w0: np.ndarray
    w1: np.ndarray

    def __post_init__(self):
        self.w0 = numerics.as_matrix(self.w0, "w0")
        self.w1 = numerics.as_matrix(self.w1, "w1")
        if self.w0.shape[1] != self.w1.shape[0]:
            raise ShapeMismatchError(
                f"layer shapes {self.w0.shape} and {self.w1.shape} do not chain")

    @property
    def d(self) -> int:
        return self.w0.shape[0]

    @property
    def hidden(self) -> int:
        return self.w0.shape[1]

    @property
    def m(self) -> int:
        return self.w1.shape[1]

    @property
    def embedding_dim(self) -> int:
        return embedding_dim(self.m)

    def params(self) -> ParameterSet:
        return {"w0": self.w0, "w1": self.w1}


def embedding_dim(m: int) -> int:
    """Length of the flattened upper triangle of an m x m symmetric matrix."""
    return m * (m + 1) // 2


def init_gae(d: int, hidden: int = 32, m: int = 16, seed=None) -> GaeModel:
    rng = np.random.default_rng(seed)
    return GaeModel(numerics.glorot_uniform(rng, d, hidden),
                    numerics.glorot_uniform(rng, hidden, m))


def encode(model: GaeModel, g: ClusterGraph) -> np.ndarray:
    """Forward pass producing one embedding row per node (n x m)."""
    if g.features.shape[1] != model.d:
        raise ShapeMismatchError(
            f"graph has {g.features.shape[1]} features, encoder expects {model.d}")
    a_norm = normalize(g)
    x_bar = relu(a_norm @ g.features @ model.w0)
    return a_norm @ x_bar @ model.w1


def decode(z: np.ndarray) -> np.ndarray:
    """Inner-product decoder: symmetric edge probabilities in (0, 1)."""
    return sigmoid(z @ z.T)


def _canonical_row_order(x: np.ndarray) -> np.ndarray:
    """Lexicographic order of the rows; invariant to how the rows were stored."""
    return np.lexsort(x.T[::-1])


def cluster_stats(x: np.ndarray, y: np.ndarray, order: np.ndarray | None = None):
    """Per-cluster sizes and mean points, accumulated in a canonical row order.

    Summing in an order derived only from point values (never from storage
    order) makes every downstream quantity bitwise invariant under node
    reordering.
    """
    if order is None:
        order = _canonical_row_order(x)
    ys = y[order]
    xs = x[order]
    group = np.argsort(ys, kind="stable")
    yg = ys[group]
    starts = np.flatnonzero(np.r_[True, yg[1:] != yg[:-1]])
    sizes = np.diff(np.r_[starts, len(yg)])
    sums = np.add.reduceat(xs[group], starts, axis=0)
    return sizes, sums / sizes[:, None]


def embed_labeling(model: GaeModel, x: np.ndarray, y: np.ndarray,
                   order: np.ndarray | None = None) -> np.ndarray:
    """Dataset embedding of a clustering without materialising the graph.

    For clique graphs the normalized adjacency averages features within each
    cluster, so the encoder output has one distinct row per cluster:
    z_c = ReLU(mean_c W0) W1 repeated size_c times.  The pooled Gram matrix is
    therefore sum_c size_c * z_c^T z_c, computed here directly.  Clusters are
    accumulated in an order canonical in (size, z_c), so the result is bitwise
    identical under node reordering and cluster relabeling.
    """
    if x.shape[1] != model.d:
        raise ShapeMismatchError(
            f"points have {x.shape[1]} features, encoder expects {model.d}")
    sizes, means = cluster_stats(x, y, order)
    z_rows = relu(means @ model.w0) @ model.w1
    key = np.lexsort(tuple(z_rows[:, j] for j in range(model.m - 1, -1, -1))
                     + (sizes,))
    z_rows = z_rows[key]
    weights = sizes[key].astype(np.float64)
    gram = (z_rows * weights[:, None]).T @ z_rows
    iu, ju = np.triu_indices(model.m)
    return gram[iu, ju]


def embed(model: GaeModel, g: ClusterGraph) -> np.ndarray:
    """Fixed-length embedding: upper triangle of Z^T Z, length m(m+1)/2."""
    return embed_labeling(model, g.features, g.labels)


# --- reconstruction training -------------------------------------------------

def _bce_pieces(model: GaeModel, g: ClusterGraph):
    a_norm = normalize(g)
    ax = a_norm @ g.features
    pre = ax @ model.w0
    x_bar = relu(pre)
    ax_bar = a_norm @ x_bar
    z = ax_bar @ model.w1
    logits = z @ z.T
    target = g.adjacency + np.eye(g.n)
    pos = target.sum()
    pos_weight = (target.size - pos) / pos
    weight = np.where(target > 0, pos_weight, 1.0)
    # stable elementwise BCE with logits
    loss_mat = weight * (np.maximum(logits, 0.0) - logits * target
                         + np.log1p(np.exp(-np.abs(logits))))
    loss = loss_mat.mean()
    return loss, (a_norm, ax, pre, ax_bar, z, logits, target, weight)


def reconstruction_loss(model: GaeModel, g: ClusterGraph) -> float:
    """Mean reweighted BCE between decode(encode(g)) and the adjacency with self-loops."""
    return float(_bce_pieces(model, g)[0])


def reconstruction_grads(model: GaeModel, g: ClusterGraph) -> tuple[float, ParameterSet]:
    """Loss and its exact gradients with respect to w0 and w1 (hand-derived)."""
    loss, (a_norm, ax, pre, ax_bar, z, logits, target, weight) = _bce_pieces(model, g)
    g_logits = weight * (sigmoid(logits) - target) / logits.size
    g_z = (g_logits + g_logits.T) @ z
    g_w1 = ax_bar.T @ g_z
    g_x_bar = a_norm @ g_z @ model.w1.T
    g_pre = g_x_bar * numerics.relu_slope(pre)
    g_w0 = ax.T @ g_pre
    return float(loss), {"w0": g_w0, "w1": g_w1}


def random_labeling(x: np.ndarray, rng: np.random.Generator,
                    max_clusters: int = MAX_CLUSTERS) -> np.ndarray:
    """A random wrong labeling: either label noise or a random spatial partition.

    Half the draws assign labels independently per point; the other half label
    by the argmax of a random linear map of the features, which yields
    geometrically plausible (but still arbitrary) partitions.
    """
    k = int(rng.integers(MIN_CLUSTERS, max_clusters + 1))
    if rng.random() < 0.15:
        return rng.integers(0, k, size=x.shape[0])
    w = rng.standard_normal((x.shape[1], k))
    b = rng.standard_normal(k)
    return (x @ w + b).argmax(axis=1)


def train_gae(corpus: Corpus, epochs: int = 100, learning_rate: float = 0.01,
              seed=None, hidden: int = 32, m: int = 16, rho: float = 0.9,
              lr_decay: float = 0.95) -> GaeModel:
    """Pretrain the encoder on the corpus, then freeze it.

    Each epoch walks the corpus in a shuffled order and takes one RMSprop step
    per graph; half of the graphs use the ground-truth labeling, half a fresh
    random labeling of the same points (resampled every epoch).
    """
    rng = np.random.default_rng(seed)
    model = init_gae(corpus.d, hidden=hidden, m=m, seed=rng)
    state = RmspropState.for_params(model.params(), learning_rate=learning_rate, rho=rho)
    truth_graphs = [build_graph(ds.x, ds.labels) for ds in corpus]
    for _ in range(epochs):
        graphs: list[ClusterGraph] = []
        for ds, tg in zip(corpus, truth_graphs):
            graphs.append(tg)
            graphs.append(build_graph(ds.x, random_labeling(ds.x, rng)))
        rng.shuffle(graphs)
        for graph in graphs:
            loss, grads = reconstruction_grads(model, graph)
            if not np.isfinite(loss):
                raise NonFiniteError(
                    f"GAE reconstruction loss became non-finite (n={graph.n})")
            new = rmsprop_step(model.params(), grads, state)
            model = GaeModel(new["w0"], new["w1"])
        state.decay_lr(lr_decay)
    return model
