"""Transferable clustering metric: learn a score from labelled datasets, then
cluster new data by maximising it with an evolutionary weight search."""

from .cem import CemConfig, ClusterNetShape, assign_clusters, cem_optimize
from .datasets import (Corpus, SampleDataset, build_corpus, corrupt, gen_anisotropic,
                       gen_blobs, gen_circles, gen_moons, load_corpus, load_dataset,
                       save_corpus, save_dataset, subsample)
from .errors import (C2mError, CheckpointCorruptError, CheckpointError,
                     CheckpointVersionError, DataFormatError, NonFiniteError,
                     ShapeMismatchError)
from .estimators import MetricGuidedClustering, TransferableClusteringMetric
from .evaluation import (AblationCurve, EvalReport, RankReport, ablation, acc,
                         emit_plot_data, nmi, rank_report)
from .gae import GaeModel, embed, embed_labeling, encode, decode, train_gae
from .graphs import ClusterGraph, build_graph, normalize
from .pipeline import (C2mModel, ClusterResult, TrainConfig, TrainReport, cluster,
                       evaluate_corpus, load_model, save_model, train)

__version__ = "0.1.0"

__all__ = [
    "AblationCurve", "C2mError", "C2mModel", "CemConfig", "CheckpointCorruptError",
    "CheckpointError", "CheckpointVersionError", "ClusterGraph", "ClusterNetShape",
    "ClusterResult", "Corpus", "DataFormatError", "EvalReport", "GaeModel",
    "MetricGuidedClustering", "NonFiniteError", "RankReport", "SampleDataset",
    "ShapeMismatchError", "TrainConfig", "TrainReport",
    "TransferableClusteringMetric", "ablation", "acc", "assign_clusters",
    "build_corpus", "build_graph", "cem_optimize", "cluster", "corrupt", "decode",
    "embed", "embed_labeling", "emit_plot_data", "encode", "evaluate_corpus",
    "gen_anisotropic", "gen_blobs", "gen_circles", "gen_moons", "load_corpus",
    "load_dataset", "load_model", "nmi", "normalize", "rank_report", "save_corpus",
    "save_dataset", "save_model", "subsample", "train", "train_gae",
]
