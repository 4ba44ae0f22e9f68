"""End-to-end training of the transferable metric and metric-guided clustering.

Training runs in three stages per the two-network design: the graph
autoencoder is pretrained on the corpus and frozen; then, for every epoch and
every sampled dataset, the cross-entropy method clusters the points against
the current critic, and the critic takes Wasserstein steps to push the
ground-truth embedding above the search's best find.  Inference needs only
the frozen weights: clustering a new dataset is a pure maximisation of the
learned score and never reads labels.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import critic as critic_mod
from . import gae as gae_mod
from .cem import CemConfig, CemState, cem_optimize, top_solutions
from .datasets import Corpus, SampleDataset
from .errors import (C2mError, CheckpointCorruptError, CheckpointVersionError,
                     ShapeMismatchError)
from .evaluation import DatasetResult, EvalReport, acc, nmi
from .numerics import RmspropState

CHECKPOINT_VERSION = "c2m-v1"

PRESETS = {
    "standard": {"epochs": 10, "batch_size": 20},
    "few-shots": {"epochs": 1, "batch_size": 5},
}


def training_cem_config() -> CemConfig:
    """Reduced search budget used inside the training loop."""
    return CemConfig(population=30, iterations=15)


@dataclass
class TrainConfig:
    """Everything that determines a training run except the corpus itself."""

    epochs: int = 10
    batch_size: int = 20
    seed: int = 0
    hidden: int = 32          # GAE hidden width
    embed_width: int = 16     # GAE output width m; critic input is m(m+1)/2
    max_clusters: int = 50
    gae_epochs: int = 100
    learning_rate: float = 0.01        # embedder pretraining step size
    critic_learning_rate: float = 5e-5  # sized against the clip box width
    lr_decay: float = 0.95
    clip: float = 0.01
    critic_steps: int = 5     # critic updates per clustering round
    critic_batch: int = 16    # pairs per critic update
    pair_window: int = 40     # how far back updates sample embedding pairs
    fake_runner_ups: int = 2  # extra search solutions used as negatives per round
    fake_randoms: int = 2     # random labelings used as negatives per round
    fake_splits: int = 1      # split-one-cluster corruptions used as negatives per round
    standardize: bool = True  # per-dataset feature standardization
    cem: CemConfig = field(default_factory=training_cem_config)

    def __post_init__(self):
        if min(self.epochs, self.batch_size, self.gae_epochs,
               self.critic_steps, self.critic_batch) < 1:
            raise C2mError("all training counts must be >= 1")
        # one knob controls the clustering-head width everywhere
        self.cem.max_clusters = self.max_clusters

    @classmethod
    def preset(cls, name: str, **overrides) -> "TrainConfig":
        if name not in PRESETS:
            raise C2mError(f"unknown preset '{name}' (choose from {', '.join(PRESETS)})")
        return cls(**{**PRESETS[name], **overrides})


@dataclass
class TrainRow:
    epoch: int
    dataset_index: int
    critic_loss: float
    train_acc: float
    inferred_k: int


@dataclass
class TrainReport:
    """One row per (epoch, sampled dataset) critic update round."""

    rows: list[TrainRow] = field(default_factory=list)

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "dataset_index", "critic_loss", "train_acc", "inferred_k"])
            for r in self.rows:
                writer.writerow([r.epoch, r.dataset_index, repr(r.critic_loss),
                                 repr(r.train_acc), r.inferred_k])


def standardize_features(x: np.ndarray, order: np.ndarray | None = None) -> np.ndarray:
    """Center each column and scale it to unit variance (constant columns pass through).

    Statistics are accumulated over the rows in canonical (value-sorted) order
    so the output is bitwise identical under any node reordering.
    """
    x = np.asarray(x, dtype=np.float64)
    if order is None:
        order = gae_mod._canonical_row_order(x)
    xs = x[order]
    mu = xs.mean(axis=0)
    sd = xs.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    return (x - mu) / sd


@dataclass
class C2mModel:
    """Frozen embedder plus trained critic; together they are the metric."""

    gae: gae_mod.GaeModel
    critic: critic_mod.CriticModel
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.critic.input_dim != self.gae.embedding_dim:
            raise ShapeMismatchError(
                f"critic input {self.critic.input_dim} does not match embedding "
                f"length {self.gae.embedding_dim}")

    @property
    def d(self) -> int:
        return self.gae.d

    @property
    def standardize(self) -> bool:
        return bool(self.meta.get("standardize", True))

    def _prepare(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Canonical row order plus (optionally standardized) features."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.d:
            raise ShapeMismatchError(
                f"points of shape {x.shape} do not match model dimension {self.d}")
        order = gae_mod._canonical_row_order(x)
        # standardization is per-column monotone, so the order carries over
        return order, standardize_features(x, order) if self.standardize else x

    def embed_labeling(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        order, prepared = self._prepare(x)
        return gae_mod.embed_labeling(self.gae, prepared, np.asarray(y), order)

    def score_labeling(self, x: np.ndarray, y: np.ndarray) -> float:
        """The learned metric r(X, y)."""
        return critic_mod.score(self.critic, self.embed_labeling(x, y))

    def scorers(self, x: np.ndarray):
        """Single and batched scoring closures with preprocessing precomputed."""
        order, prepared = self._prepare(x)

        def score_one(x_, y):
            z = gae_mod.embed_labeling(self.gae, prepared, np.asarray(y), order)
            return critic_mod.score(self.critic, z)

        def score_batch(x_, labelings):
            z = np.stack([gae_mod.embed_labeling(self.gae, prepared, lab, order)
                          for lab in labelings])
            return critic_mod.forward(self.critic, z)

        return score_one, score_batch

    def save(self, path) -> None:
        save_model(self, path)

    @classmethod
    def load(cls, path) -> "C2mModel":
        return load_model(path)


# --- training -----------------------------------------------------------------

def train(corpus: Corpus, cfg: TrainConfig, on_critic_step=None) -> tuple[C2mModel, TrainReport]:
    """Learn the metric from a labelled corpus.

    ``on_critic_step(model)`` is invoked after every individual critic update;
    it exists for instrumentation (weight-box checks, loss tracing) and has no
    effect on training.
    """
    if corpus.role != "train":
        raise C2mError(f"expected a corpus with role 'train', got '{corpus.role}'")
    cfg.cem.max_clusters = cfg.max_clusters
    root = np.random.SeedSequence(cfg.seed)
    gae_seed, critic_seed, loop_seed = root.spawn(3)

    gae_corpus = corpus
    if cfg.standardize:
        gae_corpus = Corpus([SampleDataset(standardize_features(ds.x), ds.labels,
                                           origin=ds.origin) for ds in corpus],
                            role=corpus.role)
    gae_model = gae_mod.train_gae(gae_corpus, epochs=cfg.gae_epochs,
                                  learning_rate=cfg.learning_rate,
                                  seed=np.random.default_rng(gae_seed),
                                  hidden=cfg.hidden, m=cfg.embed_width,
                                  lr_decay=cfg.lr_decay)
    critic_model = critic_mod.init_critic(gae_model.embedding_dim, clip=cfg.clip,
                                          seed=np.random.default_rng(critic_seed))
    opt = RmspropState.for_params(critic_model.params,
                                  learning_rate=cfg.critic_learning_rate)
    rng = np.random.default_rng(loop_seed)

    frozen = C2mModel(gae_model, critic_model, meta=_meta_for(corpus, cfg, gae_model))
    real_buf: list[np.ndarray] = []
    fake_buf: list[np.ndarray] = []
    report = TrainReport()
    for epoch in range(1, cfg.epochs + 1):
        if cfg.batch_size <= len(corpus):
            picks = rng.permutation(len(corpus))[: cfg.batch_size]
        else:
            picks = rng.integers(0, len(corpus), size=cfg.batch_size)
        for di in picks:
            ds = corpus.datasets[int(di)]
            score_one, score_batch = frozen.scorers(ds.x)
            cem_seed = int(rng.integers(0, 2**63 - 1))
            _, y_hat, cem_state = cem_optimize(ds.x, score_one, cfg.cem, seed=cem_seed,
                                               score_batch_fn=score_batch)
            # negatives for this round: the search's best find, its distinct
            # runner-ups, and fresh random labelings to keep the coarse
            # ordering calibrated
            fakes = [lab for _, lab in
                     top_solutions(cem_state, 1 + cfg.fake_runner_ups)]
            prepared = standardize_features(ds.x) if cfg.standardize else ds.x
            for _ in range(cfg.fake_randoms):
                fakes.append(gae_mod.random_labeling(prepared, rng,
                                                     max_clusters=cfg.max_clusters))
            for _ in range(cfg.fake_splits):
                fakes.append(_split_one_cluster(prepared, ds.labels, rng))
            z_real = frozen.embed_labeling(ds.x, ds.labels)
            for lab in fakes:
                real_buf.append(z_real)
                fake_buf.append(frozen.embed_labeling(ds.x, lab))
            fresh = len(fakes)
            window = min(len(real_buf), max(cfg.pair_window, fresh))
            base = len(real_buf) - window
            reals = np.stack(real_buf[base:])
            fakes_z = np.stack(fake_buf[base:])
            losses = []
            for _ in range(cfg.critic_steps):
                # this round's pairs always participate; the remaining slots go
                # to the window pairs the critic currently gets most wrong
                margins = (critic_mod.forward(critic_model, fakes_z)
                           - critic_mod.forward(critic_model, reals))
                take = max(0, min(cfg.critic_batch - fresh, window - fresh))
                hard = np.argsort(-margins[: window - fresh], kind="stable")[:take]
                bidx = np.r_[hard, np.arange(window - fresh, window)].astype(int)
                loss = critic_mod.wgan_step(critic_model, reals[bidx], fakes_z[bidx], opt)
                losses.append(loss)
                if on_critic_step is not None:
                    on_critic_step(critic_model)
            report.rows.append(TrainRow(epoch, int(di), float(np.mean(losses)),
                                        acc(y_hat, ds.labels),
                                        int(len(np.unique(y_hat)))))
        opt.decay_lr(cfg.lr_decay)
    return frozen, report


def _split_one_cluster(x: np.ndarray, y: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Refine the true labeling by cutting one cluster with a random hyperplane.

    Such refinements are the search's favourite way to overfit the metric, so
    they make pointed negatives.
    """
    labels = y.copy()
    present = np.unique(labels)
    target = present[rng.integers(len(present))]
    members = np.flatnonzero(labels == target)
    if len(members) < 4:
        return labels
    direction = rng.standard_normal(x.shape[1])
    proj = x[members] @ direction
    labels[members[proj > np.median(proj)]] = labels.max() + 1
    return labels


def _meta_for(corpus: Corpus, cfg: TrainConfig, gae_model) -> dict:
    return {
        "d": corpus.d,
        "hidden": cfg.hidden,
        "embed_width": cfg.embed_width,
        "max_clusters": cfg.max_clusters,
        "seed": cfg.seed,
        "corpus": f"{corpus.role}:{len(corpus)}x{corpus.datasets[0].n}",
        "config": asdict(cfg),
    }


# --- inference ------------------------------------------------------------------

@dataclass
class ClusterResult:
    labels: np.ndarray
    score: float
    n_clusters: int
    state: CemState


def cluster(model: C2mModel, x: np.ndarray, cem_cfg: CemConfig | None = None,
            seed=0) -> ClusterResult:
    """Cluster an unlabelled dataset by maximising the learned metric.

    The API deliberately has no labels parameter: inference consumes only the
    point matrix and the frozen model.
    """
    x = np.asarray(x, dtype=np.float64)
    cfg = cem_cfg or CemConfig(max_clusters=model.meta.get("max_clusters", 50))
    score_one, score_batch = model.scorers(x)
    _, labels, state = cem_optimize(x, score_one, cfg, seed=seed,
                                    score_batch_fn=score_batch)
    return ClusterResult(labels=labels, score=state.best_score,
                         n_clusters=int(len(np.unique(labels))), state=state)


def evaluate_corpus(model: C2mModel, corpus: Corpus, cem_cfg: CemConfig | None = None,
                    seed=0, n_jobs: int = 1) -> EvalReport:
    """Cluster every dataset of a labelled corpus and measure ACC and NMI."""
    seeds = np.random.SeedSequence(seed).spawn(len(corpus))

    def one(ds: SampleDataset, child) -> DatasetResult:
        res = cluster(model, ds.x, cem_cfg, seed=np.random.default_rng(child))
        return DatasetResult(origin=ds.origin, acc=acc(res.labels, ds.labels),
                             nmi=nmi(res.labels, ds.labels),
                             inferred_k=res.n_clusters, score=res.score)

    if n_jobs > 1:
        from joblib import Parallel, delayed
        results = Parallel(n_jobs=n_jobs)(
            delayed(one)(ds, child) for ds, child in zip(corpus.datasets, seeds))
    else:
        results = [one(ds, child) for ds, child in zip(corpus.datasets, seeds)]
    cem_echo = asdict(cem_cfg) if cem_cfg is not None else asdict(CemConfig())
    return EvalReport(list(results), config={"seed": seed, "cem": cem_echo,
                                             "model": model.meta.get("corpus", "")})


# --- persistence ------------------------------------------------------------------

def _array_to_json(a: np.ndarray) -> dict:
    return {"shape": list(a.shape), "data": [float(v) for v in a.ravel()]}


def _array_from_json(obj, name: str) -> np.ndarray:
    try:
        shape = tuple(obj["shape"])
        data = np.asarray(obj["data"], dtype=np.float64)
    except (TypeError, KeyError) as exc:
        raise CheckpointCorruptError(f"array '{name}' malformed: {exc}") from exc
    if data.size != int(np.prod(shape)):
        raise ShapeMismatchError(
            f"array '{name}': {data.size} values do not fill shape {shape}")
    return data.reshape(shape)


def save_model(model: C2mModel, path) -> None:
    """JSON checkpoint with a version tag, metadata and flat weight arrays."""
    doc = {
        "version": CHECKPOINT_VERSION,
        "meta": model.meta,
        "gae": {"w0": _array_to_json(model.gae.w0), "w1": _array_to_json(model.gae.w1)},
        "critic": {"clip": model.critic.clip,
                   "params": {k: _array_to_json(v) for k, v in model.critic.params.items()}},
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True) + "\n")


def load_model(path) -> C2mModel:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CheckpointCorruptError(f"{path}: cannot read checkpoint: {exc}") from exc
    if not isinstance(doc, dict) or "version" not in doc:
        raise CheckpointCorruptError(f"{path}: missing version field")
    if doc["version"] != CHECKPOINT_VERSION:
        raise CheckpointVersionError(
            f"{path}: version '{doc['version']}' unsupported (expected {CHECKPOINT_VERSION})")
    try:
        gae_doc, critic_doc = doc["gae"], doc["critic"]
        w0 = _array_from_json(gae_doc["w0"], "gae.w0")
        w1 = _array_from_json(gae_doc["w1"], "gae.w1")
        params = {k: _array_from_json(v, f"critic.{k}")
                  for k, v in critic_doc["params"].items()}
        clip = float(critic_doc["clip"])
        meta = doc.get("meta", {})
    except (KeyError, TypeError) as exc:
        raise CheckpointCorruptError(f"{path}: missing field: {exc}") from exc
    model = C2mModel(gae_mod.GaeModel(w0, w1),
                     critic_mod.CriticModel(params=params, clip=clip), meta)
    return model
