"""Clustering network and the cross-entropy method that searches its weights.

Clustering is performed by a one-hidden-layer network mapping each point to
one of ``max_clusters`` logits; the label is the argmax.  The network is never
trained by gradients: a diagonal-Gaussian cross-entropy method samples weight
vectors, scores the induced clusterings with an arbitrary metric, and refits
the Gaussian to the elite fraction each iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import C2mError, NonFiniteError, ShapeMismatchError
from .numerics import ParameterSet, relu


@dataclass(frozen=True)
class ClusterNetShape:
    """Weight layout of the clustering network [d -> hidden (ReLU) -> k].

    The network carries no bias terms, matching the bias-free graph
    convolutions elsewhere; its logits are positively homogeneous in the
    features, so cluster boundaries radiate from the feature origin.
    """

    d: int
    hidden: int = 16
    k: int = 50

    @property
    def flat_dim(self) -> int:
        return self.d * self.hidden + self.hidden * self.k

    def unpack(self, flat: np.ndarray) -> ParameterSet:
        d, h, k = self.d, self.hidden, self.k
        if flat.shape != (self.flat_dim,):
            raise ShapeMismatchError(
                f"weight vector {flat.shape} does not match flat dim {self.flat_dim}")
        return {"w1": flat[: d * h].reshape(d, h),
                "w2": flat[d * h:].reshape(h, k)}

    def pack(self, params: ParameterSet) -> np.ndarray:
        return np.concatenate([params["w1"].ravel(), params["w2"].ravel()])


def assign_clusters(params: ParameterSet, x: np.ndarray) -> np.ndarray:
    """Label each point by the argmax logit; ties go to the lowest index."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params["w1"].shape[0]:
        raise ShapeMismatchError(
            f"points {x.shape} do not match network input {params['w1'].shape[0]}")
    logits = relu(x @ params["w1"]) @ params["w2"]
    return logits.argmax(axis=1)


def _assign_population(shape: ClusterNetShape, flats: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Labelings for a whole population at once, shape (pop, n)."""
    d, h, k = shape.d, shape.hidden, shape.k
    pop = flats.shape[0]
    w1 = flats[:, : d * h].reshape(pop, d, h)
    w2 = flats[:, d * h:].reshape(pop, h, k)
    hidden = relu(np.einsum("nd,pdh->pnh", x, w1))
    logits = np.einsum("pnh,phk->pnk", hidden, w2)
    return logits.argmax(axis=2)


@dataclass
class CemConfig:
    """Search-distribution settings for one optimisation run."""

    population: int = 50
    elite_frac: float = 0.1
    iterations: int = 30
    sigma_init: float = 1.0
    sigma_floor: float = 1e-3
    hidden: int = 16
    max_clusters: int = 50

    def __post_init__(self):
        if self.population < 2 or self.iterations < 1:
            raise C2mError("population must be >= 2 and iterations >= 1")
        if not 0.0 < self.elite_frac < 1.0:
            raise C2mError(f"elite fraction must be in (0, 1), got {self.elite_frac}")
        if self.elite_count < 2:
            raise C2mError(
                f"elite set of {self.elite_count} is too small to refit a Gaussian")
        if self.sigma_floor <= 0 or self.sigma_init < self.sigma_floor:
            raise C2mError("need sigma_init >= sigma_floor > 0")

    @property
    def elite_count(self) -> int:
        return math.ceil(self.elite_frac * self.population)


@dataclass
class CemState:
    """Search distribution, best-ever solution, and the evaluation log."""

    mu: np.ndarray
    sigma: np.ndarray
    best_weights: np.ndarray | None = None
    best_score: float = -np.inf
    history: list[tuple[int, float, float]] = field(default_factory=list)
    solutions: list[tuple[float, np.ndarray]] = field(default_factory=list)


def cem_optimize(x: np.ndarray, score_fn, cfg: CemConfig | None = None, seed=None,
                 score_batch_fn=None, record_solutions: bool = True,
                 shape: ClusterNetShape | None = None):
    """Maximise ``score_fn(x, labels)`` over clustering-network weights.

    Per iteration: sample a population from N(mu, diag(sigma^2)), label the
    points with each sampled network, score the labelings, keep the top elite
    fraction and refit mu/sigma to it (sigma gets an additive floor so the
    search never collapses).  Samples whose score is non-finite are discarded.

    Returns ``(best_params, best_labels, state)`` where ``best_params`` is the
    unpacked best-ever weight vector and ``best_labels`` its labeling.
    ``score_batch_fn``, when given, must map (x, labelings matrix) to a score
    vector and is used instead of the per-labeling callable.
    """
    x = np.asarray(x, dtype=np.float64)
    cfg = cfg or CemConfig()
    if shape is None:
        shape = ClusterNetShape(d=x.shape[1], hidden=cfg.hidden, k=cfg.max_clusters)
    rng = np.random.default_rng(seed)
    state = CemState(mu=np.zeros(shape.flat_dim),
                     sigma=np.full(shape.flat_dim, float(cfg.sigma_init)))
    best_labels = None
    for it in range(cfg.iterations):
        flats = state.mu + state.sigma * rng.standard_normal((cfg.population, shape.flat_dim))
        labelings = _assign_population(shape, flats, x)
        if score_batch_fn is not None:
            scores = np.asarray(score_batch_fn(x, labelings), dtype=np.float64)
        else:
            scores = np.array([score_fn(x, labelings[j]) for j in range(cfg.population)])
        finite = np.isfinite(scores)
        if not finite.any():
            raise NonFiniteError(f"all {cfg.population} scores non-finite at iteration {it}")
        if record_solutions:
            for j in np.flatnonzero(finite):
                state.solutions.append((float(scores[j]), labelings[j].astype(np.int16)))
        scores = np.where(finite, scores, -np.inf)
        order = np.argsort(-scores, kind="stable")
        elite_idx = order[:min(cfg.elite_count, int(finite.sum()))]
        elite = flats[elite_idx]
        if scores[order[0]] > state.best_score:
            state.best_score = float(scores[order[0]])
            state.best_weights = flats[order[0]].copy()
            best_labels = labelings[order[0]].copy()
        state.mu = elite.mean(axis=0)
        state.sigma = elite.std(axis=0) + cfg.sigma_floor
        state.history.append((it, state.best_score, float(scores[elite_idx].mean())))
    best_params = shape.unpack(state.best_weights)
    return best_params, best_labels, state


def top_solutions(state: CemState, count: int, distinct: bool = True):
    """Highest-scoring logged labelings, optionally deduplicated exactly."""
    ranked = sorted(state.solutions, key=lambda item: -item[0])
    out = []
    seen = set()
    for score_val, labels in ranked:
        key = labels.tobytes() if distinct else len(out)
        if key in seen:
            continue
        seen.add(key)
        out.append((score_val, labels.astype(np.int64)))
        if len(out) >= count:
            break
    return out
