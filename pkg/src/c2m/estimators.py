"""Scikit-learn style wrappers so the pipeline composes with that ecosystem.

``TransferableClusteringMetric`` is the trainable object: fit it on a list of
labelled datasets, then score candidate clusterings or cluster new data.
``MetricGuidedClustering`` wraps a fitted metric as a standard clusterer with
``fit`` / ``fit_predict`` and a ``labels_`` attribute.
"""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_array

from .cem import CemConfig
from .datasets import Corpus, SampleDataset
from .pipeline import C2mModel, TrainConfig, cluster, load_model, train


def _check_dataset(x) -> np.ndarray:
    return check_array(x, dtype=np.float64, ensure_min_samples=2)


class TransferableClusteringMetric(BaseEstimator):
    """Learn a clustering score from labelled example datasets.

    Unlike most estimators the samples passed to :meth:`fit` are whole
    datasets: ``X`` is a sequence of (n_i, d) arrays and ``y`` the matching
    sequence of integer labelings.  After fitting, :meth:`score_labeling`
    evaluates any clustering of any d-dimensional dataset and
    :meth:`predict` clusters a new dataset by maximising that score.
    """

    def __init__(self, preset: str = "standard", epochs: int | None = None,
                 batch_size: int | None = None, hidden: int = 32,
                 embed_width: int = 16, max_clusters: int = 50,
                 gae_epochs: int = 100, learning_rate: float = 0.01,
                 critic_learning_rate: float = 5e-5,
                 lr_decay: float = 0.95, clip: float = 0.01,
                 critic_steps: int = 5, critic_batch: int = 16,
                 search_population: int = 50, search_iterations: int = 30,
                 elite_frac: float = 0.1, random_state: int = 0):
        self.preset = preset
        self.epochs = epochs
        self.batch_size = batch_size
        self.hidden = hidden
        self.embed_width = embed_width
        self.max_clusters = max_clusters
        self.gae_epochs = gae_epochs
        self.learning_rate = learning_rate
        self.critic_learning_rate = critic_learning_rate
        self.lr_decay = lr_decay
        self.clip = clip
        self.critic_steps = critic_steps
        self.critic_batch = critic_batch
        self.search_population = search_population
        self.search_iterations = search_iterations
        self.elite_frac = elite_frac
        self.random_state = random_state

    def _train_config(self) -> TrainConfig:
        overrides = dict(seed=self.random_state, hidden=self.hidden,
                         embed_width=self.embed_width, max_clusters=self.max_clusters,
                         gae_epochs=self.gae_epochs, learning_rate=self.learning_rate,
                         critic_learning_rate=self.critic_learning_rate,
                         lr_decay=self.lr_decay, clip=self.clip,
                         critic_steps=self.critic_steps, critic_batch=self.critic_batch)
        cfg = TrainConfig.preset(self.preset, **overrides)
        if self.epochs is not None:
            cfg.epochs = self.epochs
        if self.batch_size is not None:
            cfg.batch_size = self.batch_size
        return cfg

    def _search_config(self) -> CemConfig:
        return CemConfig(population=self.search_population,
                         iterations=self.search_iterations,
                         elite_frac=self.elite_frac,
                         max_clusters=self.max_clusters)

    def fit(self, X, y):
        """Fit on a sequence of datasets and their ground-truth labelings."""
        if isinstance(X, np.ndarray) and X.ndim == 2:
            X, y = [X], [y]
        if len(X) != len(y):
            raise ValueError(f"{len(X)} datasets but {len(y)} labelings")
        datasets = [SampleDataset(_check_dataset(xi), np.asarray(yi, dtype=np.int64))
                    for xi, yi in zip(X, y)]
        corpus = Corpus(datasets, role="train")
        self.model_, self.report_ = train(corpus, self._train_config())
        self.n_features_in_ = corpus.d
        return self

    def _require_fitted(self) -> C2mModel:
        model = getattr(self, "model_", None)
        if model is None:
            raise NotFittedError("call fit() or load() before using the metric")
        return model

    def score_labeling(self, X, y) -> float:
        """The learned metric value for one candidate clustering."""
        return self._require_fitted().score_labeling(_check_dataset(X), np.asarray(y))

    def predict(self, X, random_state: int | None = None) -> np.ndarray:
        """Cluster one new dataset by maximising the learned metric."""
        seed = self.random_state if random_state is None else random_state
        res = cluster(self._require_fitted(), _check_dataset(X),
                      self._search_config(), seed=seed)
        return res.labels

    def save(self, path) -> None:
        self._require_fitted().save(path)

    @classmethod
    def from_file(cls, path) -> "TransferableClusteringMetric":
        est = cls()
        est.model_ = load_model(path)
        est.n_features_in_ = est.model_.d
        return est


class MetricGuidedClustering(ClusterMixin, BaseEstimator):
    """Cluster one dataset by maximising a fitted metric.

    ``metric`` may be a fitted :class:`TransferableClusteringMetric`, a raw
    :class:`~c2m.pipeline.C2mModel`, or a path to a saved checkpoint.
    """

    def __init__(self, metric=None, population: int = 50, iterations: int = 30,
                 elite_frac: float = 0.1, sigma_init: float = 1.0,
                 sigma_floor: float = 1e-3, random_state: int = 0):
        self.metric = metric
        self.population = population
        self.iterations = iterations
        self.elite_frac = elite_frac
        self.sigma_init = sigma_init
        self.sigma_floor = sigma_floor
        self.random_state = random_state

    def _resolve_model(self) -> C2mModel:
        m = self.metric
        if isinstance(m, TransferableClusteringMetric):
            return m._require_fitted()
        if isinstance(m, C2mModel):
            return m
        if isinstance(m, (str,)) or hasattr(m, "__fspath__"):
            return load_model(m)
        raise ValueError("metric must be a fitted metric, a model, or a checkpoint path")

    def fit(self, X, y=None):
        model = self._resolve_model()
        cfg = CemConfig(population=self.population, iterations=self.iterations,
                        elite_frac=self.elite_frac, sigma_init=self.sigma_init,
                        sigma_floor=self.sigma_floor,
                        max_clusters=model.meta.get("max_clusters", 50))
        res = cluster(model, _check_dataset(X), cfg, seed=self.random_state)
        self.labels_ = res.labels
        self.score_ = res.score
        self.n_clusters_ = res.n_clusters
        self.n_features_in_ = model.d
        return self
