"""Command-line entry point.

Subcommands: gen-data, train, cluster, score, ablate, eval.  Every command is
deterministic given its flags; seeds are ordinary flags.  A JSON config file
can supply defaults via --config, with explicit flags taking precedence.
Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from .cem import CemConfig
from .datasets import (FAMILIES, build_corpus, load_corpus, load_dataset,
                       save_corpus, save_dataset, SampleDataset)
from .errors import C2mError, DataFormatError
from .evaluation import ablation, emit_plot_data
from .pipeline import (TrainConfig, cluster, evaluate_corpus, load_model, train)

ERROR_PREFIX = "c2m: error:"


def _fail(message: str, code: int) -> int:
    print(f"{ERROR_PREFIX} {message}", file=sys.stderr)
    return code


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get("C2M_THREADS", "1")))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="c2m",
        description="learn a transferable clustering metric, then cluster with it")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic corpus plus manifest")
    p.add_argument("--config", type=Path, default=None, help="JSON file of flag defaults")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--samples", type=int, default=20, help="number of sample datasets")
    p.add_argument("--pools", type=int, default=None,
                   help="number of source pools (default: one per sample)")
    p.add_argument("--points", type=int, default=200, help="points per sample dataset")
    p.add_argument("--pool-size", type=int, default=1500)
    p.add_argument("--role", choices=("train", "test"), default="train")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", type=Path, required=True)

    p = sub.add_parser("train", help="train the metric on a labelled corpus")
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--corpus", type=Path, required=True, help="corpus manifest JSON")
    p.add_argument("--preset", choices=("standard", "few-shots"), default="standard")
    p.add_argument("--epochs", type=int, default=None, help="override preset epochs")
    p.add_argument("--batch", type=int, default=None, help="override preset datasets per epoch")
    p.add_argument("--gae-epochs", type=int, default=100)
    p.add_argument("--max-clusters", type=int, default=50,
                   help="clustering-head width (9 suits the 2-D synthetic families)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True, help="checkpoint path")
    p.add_argument("--report", type=Path, default=None, help="training report CSV")

    p = sub.add_parser("cluster", help="cluster an unlabelled dataset")
    _model_data_flags(p)
    p.add_argument("--out", type=Path, default=None, help="labels CSV (default: stdout)")
    _search_flags(p)

    p = sub.add_parser("score", help="score a given labeling of a dataset")
    _model_data_flags(p)
    p.add_argument("--labels", type=Path, required=True, help="labels CSV")

    p = sub.add_parser("ablate", help="score progressively mislabelled copies")
    _model_data_flags(p)
    p.add_argument("--labels", type=Path, default=None,
                   help="labels CSV (default: label column of --data)")
    p.add_argument("--copies", type=int, default=50)
    p.add_argument("--out", type=Path, required=True, help="curve CSV")

    p = sub.add_parser("eval", help="cluster a labelled test corpus and report ACC/NMI")
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=None, help="report JSON (default: stdout)")
    p.add_argument("--threads", type=int, default=None,
                   help="worker processes (default: C2M_THREADS or 1)")
    _search_flags(p)
    return parser


def _model_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--model", type=Path, required=True, help="checkpoint JSON")
    p.add_argument("--data", type=Path, required=True, help="dataset CSV")
    p.add_argument("--seed", type=int, default=0)


def _search_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--population", type=int, default=50)
    p.add_argument("--iterations", type=int, default=30)
    p.add_argument("--elite-frac", type=float, default=0.1)


def _apply_config_file(parser, argv) -> list[str]:
    """Load --config JSON as defaults; explicit flags still win."""
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config", type=Path, default=None)
    known, _ = probe.parse_known_args(argv[1:])
    if known.config is None:
        return argv
    try:
        values = json.loads(Path(known.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataFormatError(f"config file {known.config}: {exc}") from exc
    if not isinstance(values, dict):
        raise DataFormatError(f"config file {known.config}: expected a JSON object")
    sub_actions = next(a for a in parser._actions
                       if isinstance(a, argparse._SubParsersAction))
    sub = sub_actions.choices[argv[0]]
    valid = {a.dest for a in sub._actions}
    for key in values:
        if key.replace("-", "_") not in valid:
            raise C2mError(f"config file {known.config}: unknown key '{key}'")
    sub.set_defaults(**{k.replace("-", "_"): v for k, v in values.items()})
    return argv


def _load_labels_csv(path: Path) -> np.ndarray:
    with path.open("r", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["label"]:
        raise DataFormatError(f"{path}: line 1: expected header 'label'")
    try:
        return np.array([int(r[0]) for r in rows[1:]], dtype=np.int64)
    except (ValueError, IndexError) as exc:
        raise DataFormatError(f"{path}: bad label row: {exc}") from exc


def _write_labels_csv(labels: np.ndarray, fh) -> None:
    fh.write("label\n")
    for v in labels:
        fh.write(f"{int(v)}\n")


def _strip_labels(ds: SampleDataset) -> np.ndarray:
    # inference commands must never consume a label column
    return ds.x


def _search_config(args) -> CemConfig:
    return CemConfig(population=args.population, iterations=args.iterations,
                     elite_frac=args.elite_frac)


def cmd_gen_data(args) -> int:
    corpus = build_corpus(args.family, args.samples, points=args.points,
                          pools=args.pools, pool_size=args.pool_size,
                          seed=args.seed, role=args.role)
    manifest = save_corpus(corpus, args.out_dir, prefix=args.family)
    print(f"wrote {len(corpus)} datasets ({args.family}, {args.points} points, "
          f"role={args.role}) and {manifest}")
    return 0


def cmd_train(args) -> int:
    if not args.corpus.exists():
        return _fail(f"corpus manifest not found: {args.corpus}", 2)
    corpus = load_corpus(args.corpus)
    overrides = {"seed": args.seed, "gae_epochs": args.gae_epochs,
                 "max_clusters": args.max_clusters}
    cfg = TrainConfig.preset(args.preset, **overrides)
    if args.epochs is not None:
        cfg.epochs = args.epochs
    if args.batch is not None:
        cfg.batch_size = args.batch
    model, report = train(corpus, cfg)
    model.save(args.out)
    if args.report is not None:
        report.to_csv(args.report)
    final = report.rows[-1]
    print(f"trained on {len(corpus)} datasets for {cfg.epochs} epochs; "
          f"final critic loss {final.critic_loss:.4f}, train ACC {final.train_acc:.3f}; "
          f"saved {args.out}")
    return 0


def cmd_cluster(args) -> int:
    model = load_model(args.model)
    x = _strip_labels(load_dataset(args.data))
    result = cluster(model, x, _search_config(args), seed=args.seed)
    if args.out is not None:
        with args.out.open("w") as fh:
            _write_labels_csv(result.labels, fh)
    else:
        _write_labels_csv(result.labels, sys.stdout)
    print(f"clusters={result.n_clusters} score={result.score!r}", file=sys.stderr)
    return 0


def cmd_score(args) -> int:
    model = load_model(args.model)
    x = _strip_labels(load_dataset(args.data))
    labels = _load_labels_csv(args.labels)
    print(repr(model.score_labeling(x, labels)))
    return 0


def cmd_ablate(args) -> int:
    ds = load_dataset(args.data)
    if args.labels is not None:
        ds = SampleDataset(ds.x, _load_labels_csv(args.labels), origin=ds.origin)
    if ds.labels is None:
        return _fail("ablate needs ground-truth labels "
                     "(a label column in --data or a --labels file)", 2)
    model = load_model(args.model)
    curve = ablation(model, ds, copies=args.copies, seed=args.seed)
    emit_plot_data(curve, args.out)
    print(f"wrote {len(curve.points)} ablation points to {args.out}")
    return 0


def cmd_eval(args) -> int:
    if not args.corpus.exists():
        return _fail(f"corpus manifest not found: {args.corpus}", 2)
    model = load_model(args.model)
    corpus = load_corpus(args.corpus)
    threads = args.threads if args.threads is not None else _default_threads()
    report = evaluate_corpus(model, corpus, _search_config(args), seed=args.seed,
                             n_jobs=threads)
    if args.out is not None:
        report.to_json(args.out)
    payload = report.to_dict()
    print(json.dumps({k: payload[k] for k in
                      ("mean_acc", "median_acc", "mean_nmi", "median_nmi")}, indent=2))
    return 0


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "cluster": cmd_cluster,
    "score": cmd_score,
    "ablate": cmd_ablate,
    "eval": cmd_eval,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        if argv and argv[0] in COMMANDS:
            argv = _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except (DataFormatError, FileNotFoundError) as exc:
        return _fail(str(exc), 2)
    except (C2mError, OSError) as exc:
        return _fail(str(exc), 1)


if __name__ == "__main__":
    sys.exit(main())
