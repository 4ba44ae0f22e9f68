"""Clustering quality measures and the critic diagnostics built on them.

ACC is the matched fraction under the best one-to-one label mapping, solved
exactly with the Hungarian algorithm on the (zero-padded, square) contingency
matrix.  NMI is mutual information normalized by the geometric mean of the
partition entropies, in natural log.  Both are invariant to relabeling either
argument.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.stats import spearmanr

from .datasets import SampleDataset, corrupt
from .errors import C2mError, ShapeMismatchError


def _contingency(pred: np.ndarray, truth: np.ndarray) -> np.ndarray:
    pred = np.asarray(pred, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise ShapeMismatchError(
            f"labelings of shape {pred.shape} and {truth.shape} do not match")
    _, pi = np.unique(pred, return_inverse=True)
    _, ti = np.unique(truth, return_inverse=True)
    table = np.zeros((pi.max() + 1, ti.max() + 1), dtype=np.int64)
    np.add.at(table, (pi, ti), 1)
    return table


def assignment_matches(pred: np.ndarray, truth: np.ndarray) -> int:
    """Number of points matched under the optimal injective label mapping."""
    table = _contingency(pred, truth)
    size = max(table.shape)
    padded = np.zeros((size, size), dtype=np.int64)
    padded[: table.shape[0], : table.shape[1]] = table
    rows, cols = linear_sum_assignment(padded, maximize=True)
    return int(padded[rows, cols].sum())


def acc(pred: np.ndarray, truth: np.ndarray) -> float:
    """Clustering accuracy: best one-to-one matched fraction, in [0, 1]."""
    return assignment_matches(pred, truth) / len(np.asarray(pred).ravel())


def nmi(pred: np.ndarray, truth: np.ndarray) -> float:
    """Normalized mutual information with geometric-mean normalization.

    Conventions: 1.0 when both partitions are the identical single cluster,
    0.0 when exactly one partition has zero entropy (it then carries no
    information about the other).
    """
    table = _contingency(pred, truth).astype(np.float64)
    n = table.sum()
    p_pred = table.sum(axis=1) / n
    p_truth = table.sum(axis=0) / n
    h_pred = -np.sum(p_pred * np.log(p_pred, where=p_pred > 0, out=np.zeros_like(p_pred)))
    h_truth = -np.sum(p_truth * np.log(p_truth, where=p_truth > 0, out=np.zeros_like(p_truth)))
    if h_pred == 0.0 and h_truth == 0.0:
        return 1.0
    if h_pred == 0.0 or h_truth == 0.0:
        return 0.0
    joint = table / n
    outer = np.outer(p_pred, p_truth)
    nz = joint > 0
    info = float(np.sum(joint[nz] * np.log(joint[nz] / outer[nz])))
    value = info / np.sqrt(h_pred * h_truth)
    return float(min(1.0, max(0.0, value)))


# --- critic diagnostics ------------------------------------------------------

@dataclass
class AblationPoint:
    mislabel_count: int
    corrected_count: int     # n * (1 - acc) against the original labeling
    score: float


@dataclass
class AblationCurve:
    """Critic scores for corrupted copies of one dataset; copy 0 is uncorrupted."""

    points: list[AblationPoint]
    origin: str = ""

    def scores(self) -> np.ndarray:
        return np.array([p.score for p in self.points])

    def corrected_counts(self) -> np.ndarray:
        return np.array([p.corrected_count for p in self.points])

    def spearman(self) -> float:
        """Rank correlation between permutation-corrected count and score."""
        rho = spearmanr(self.corrected_counts(), self.scores()).statistic
        return float(rho)


def ablation(model, ds: SampleDataset, copies: int = 50, seed=None) -> AblationCurve:
    """Score copies of ``ds`` with uniformly drawn mislabel counts.

    The first copy always has zero mislabels so the curve anchors at the
    ground truth; the rest draw their count uniformly from [0, n].  Both the
    raw count and the permutation-corrected count (via optimal matching
    against the original labels) are recorded.
    """
    if ds.labels is None:
        raise C2mError("ablation requires a labelled dataset")
    rng = np.random.default_rng(seed)
    counts = np.concatenate([[0], rng.integers(0, ds.n + 1, size=max(copies - 1, 0))])
    points = []
    for i, count in enumerate(counts):
        copy = corrupt(ds, int(count), seed=rng) if count else ds
        corrected = ds.n - assignment_matches(copy.labels, ds.labels)
        points.append(AblationPoint(int(count), corrected,
                                    model.score_labeling(copy.x, copy.labels)))
    return AblationCurve(points, origin=ds.origin)


@dataclass
class RankReport:
    """How often the ground truth outranks alternative labelings."""

    best_rate: float
    top3_rate: float
    ranks: list[int]
    candidates_per_dataset: list[int]


def rank_report(model, corpus, candidates) -> RankReport:
    """Rank each dataset's truth among candidate labelings by critic score.

    ``candidates[i]`` is a sequence of alternative labelings for dataset i
    (the truth itself is scored separately and must not be included).  Ties
    with the truth count in its favor.
    """
    if len(candidates) != len(corpus.datasets):
        raise ShapeMismatchError(
            f"{len(candidates)} candidate lists for {len(corpus.datasets)} datasets")
    ranks = []
    sizes = []
    for ds, alts in zip(corpus.datasets, candidates):
        truth_score = model.score_labeling(ds.x, ds.labels)
        alt_scores = np.array([model.score_labeling(ds.x, np.asarray(a)) for a in alts])
        rank = 1 + int((alt_scores > truth_score).sum())
        ranks.append(rank)
        sizes.append(len(alts) + 1)
    ranks_arr = np.array(ranks)
    return RankReport(best_rate=float((ranks_arr == 1).mean()),
                      top3_rate=float((ranks_arr <= 3).mean()),
                      ranks=ranks, candidates_per_dataset=sizes)


# --- reports and plot data ---------------------------------------------------

@dataclass
class DatasetResult:
    origin: str
    acc: float
    nmi: float
    inferred_k: int
    score: float


@dataclass
class EvalReport:
    """Per-dataset accuracy figures plus their aggregates."""

    results: list[DatasetResult]
    config: dict = field(default_factory=dict)

    @property
    def mean_acc(self) -> float:
        return float(np.mean([r.acc for r in self.results]))

    @property
    def median_acc(self) -> float:
        return float(np.median([r.acc for r in self.results]))

    @property
    def mean_nmi(self) -> float:
        return float(np.mean([r.nmi for r in self.results]))

    @property
    def median_nmi(self) -> float:
        return float(np.median([r.nmi for r in self.results]))

    def to_dict(self) -> dict:
        return {
            "mean_acc": self.mean_acc, "median_acc": self.median_acc,
            "mean_nmi": self.mean_nmi, "median_nmi": self.median_nmi,
            "datasets": [{"origin": r.origin, "acc": r.acc, "nmi": r.nmi,
                          "inferred_k": r.inferred_k, "score": r.score}
                         for r in self.results],
            "config": self.config,
        }

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")


def emit_plot_data(obj, path) -> None:
    """Write an ablation curve or rank report as a deterministic CSV.

    The first line is a comment row documenting the columns.
    """
    path = Path(path)
    with path.open("w", newline="") as fh:
        if isinstance(obj, AblationCurve):
            fh.write("# mislabel_count,corrected_count,score\n")
            writer = csv.writer(fh)
            for p in obj.points:
                writer.writerow([p.mislabel_count, p.corrected_count, repr(p.score)])
        elif isinstance(obj, RankReport):
            fh.write("# dataset_index,rank,candidates\n")
            writer = csv.writer(fh)
            for i, (rank, size) in enumerate(zip(obj.ranks, obj.candidates_per_dataset)):
                writer.writerow([i, rank, size])
        elif isinstance(obj, EvalReport):
            fh.write("# origin,acc,nmi,inferred_k,score\n")
            writer = csv.writer(fh)
            for r in obj.results:
                writer.writerow([r.origin, repr(r.acc), repr(r.nmi),
                                 r.inferred_k, repr(r.score)])
        else:
            raise C2mError(f"cannot emit plot data for {type(obj).__name__}")
