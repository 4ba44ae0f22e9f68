"""Synthetic dataset families, the pool/subsample protocol, and CSV persistence.

Four 2-D generator families are provided: isotropic Gaussian blobs, their
anisotropic (linearly transformed) variant, two interleaving moons, and two
concentric circles.  Every generator is a pure function of its arguments and
seed.  Labelled sample datasets are produced by drawing a large pool from one
family and subsampling it, mirroring how real corpora are built from one big
labelled source.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import C2mError, DataFormatError, ShapeMismatchError

FAMILIES = ("blobs", "anisotropic", "moons", "circles")

CENTER_BOX = 10.0      # blob centers drawn uniformly in [-box, box]^d
MIN_CLUSTERS = 2       # random cluster-count draw for corpus building
MAX_CLUSTERS = 9


@dataclass
class SampleDataset:
    """One point matrix with an optional ground-truth labeling.

    ``x`` is (n, d) float64; ``labels``, when present, is a length-n integer
    array of cluster indices starting at 0.
    """

    x: np.ndarray
    labels: np.ndarray | None = None
    origin: str = ""

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        if self.x.ndim != 2:
            raise ShapeMismatchError(f"points must be 2-D, got shape {self.x.shape}")
        if self.n < 2 or self.d < 1:
            raise C2mError(f"need at least 2 points and 1 feature, got {self.x.shape}")
        if not np.all(np.isfinite(self.x)):
            raise C2mError("points contain non-finite values")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (self.n,):
                raise ShapeMismatchError(
                    f"labels length {self.labels.shape} does not match {self.n} points")
            if self.labels.min() < 0:
                raise C2mError("cluster indices must be non-negative")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]


@dataclass
class Corpus:
    """A collection of labelled sample datasets sharing one feature dimension."""

    datasets: list[SampleDataset]
    role: str = "train"

    def __post_init__(self):
        if not self.datasets:
            raise C2mError("corpus must contain at least one dataset")
        d = self.datasets[0].d
        for i, ds in enumerate(self.datasets):
            if ds.labels is None:
                raise C2mError(f"corpus dataset {i} has no labels")
            if ds.d != d:
                raise ShapeMismatchError(
                    f"corpus dataset {i} has {ds.d} features, expected {d}")

    @property
    def d(self) -> int:
        return self.datasets[0].d

    def __len__(self) -> int:
        return len(self.datasets)

    def __iter__(self):
        return iter(self.datasets)


# --- generators -------------------------------------------------------------

def _split_counts(n: int, k: int) -> np.ndarray:
    counts = np.full(k, n // k, dtype=np.int64)
    counts[: n % k] += 1
    return counts


def _draw_centers(rng: np.random.Generator, k: int, d: int, box: float,
                  min_separation: float) -> np.ndarray:
    """Uniform centers in [-box, box]^d, redrawn until pairwise separated."""
    for _ in range(50):
        centers = [rng.uniform(-box, box, size=d)]
        for _ in range(k - 1):
            for _ in range(200):
                cand = rng.uniform(-box, box, size=d)
                if all(np.linalg.norm(cand - c) >= min_separation for c in centers):
                    centers.append(cand)
                    break
            else:
                break
        if len(centers) == k:
            return np.stack(centers)
    raise C2mError(f"cannot place {k} centers {min_separation} apart "
                   f"in a box of half-width {box}")


def gen_blobs(n: int, k: int = 3, centers=None, spread: float = 1.0,
              seed=None, d: int = 2, min_separation: float | None = None) -> SampleDataset:
    """Isotropic Gaussian blobs; label = index of the generating center.

    When centers are drawn randomly they keep a minimum pairwise distance
    (default 5x the spread) so clusters are resolvable, matching how such
    snapshot datasets are usually produced.
    """
    rng = np.random.default_rng(seed)
    if spread < 0:
        raise C2mError(f"spread must be non-negative, got {spread}")
    if centers is None:
        if not 1 <= k <= MAX_CLUSTERS:
            raise C2mError(f"cluster count must be in [1, {MAX_CLUSTERS}], got {k}")
        if min_separation is None:
            min_separation = 5.0 * spread
        centers = _draw_centers(rng, k, d, CENTER_BOX, min_separation)
    else:
        centers = np.asarray(centers, dtype=np.float64)
        k = centers.shape[0]
        d = centers.shape[1]
    if k > n:
        raise C2mError(f"cannot place {k} clusters on {n} points")
    counts = _split_counts(n, k)
    labels = np.repeat(np.arange(k), counts)
    x = centers[labels] + spread * rng.standard_normal((n, d))
    return SampleDataset(x, labels, origin=f"blobs(n={n},k={k},seed={seed})")


def gen_anisotropic(n: int, k: int = 3, spread: float = 1.0, transform=None,
                    seed=None) -> SampleDataset:
    """Blobs pushed through an invertible 2x2 linear map; labels unchanged."""
    if transform is None:
        transform = np.array([[0.6, -0.6], [-0.4, 0.8]])
    transform = np.asarray(transform, dtype=np.float64)
    if transform.shape != (2, 2):
        raise ShapeMismatchError(f"transform must be 2x2, got {transform.shape}")
    if abs(np.linalg.det(transform)) < 1e-12:
        raise C2mError("transform is singular")
    base = gen_blobs(n, k=k, spread=spread, seed=seed, d=2)
    return SampleDataset(base.x @ transform, base.labels,
                         origin=f"anisotropic(n={n},k={k},seed={seed})")


def gen_moons(n: int, noise: float = 0.05, seed=None) -> SampleDataset:
    """Two interleaving half-circle arcs (unit radius, 0.5 vertical offset).

    The upper arc is (cos t, sin t) and the lower arc (1 - cos t, 0.5 - sin t)
    for t uniform in [0, pi]; Gaussian noise is added afterwards.
    """
    rng = np.random.default_rng(seed)
    if noise < 0:
        raise C2mError(f"noise must be non-negative, got {noise}")
    n_out = n - n // 2
    n_in = n // 2
    t_out = rng.uniform(0.0, np.pi, size=n_out)
    t_in = rng.uniform(0.0, np.pi, size=n_in)
    outer = np.column_stack([np.cos(t_out), np.sin(t_out)])
    inner = np.column_stack([1.0 - np.cos(t_in), 0.5 - np.sin(t_in)])
    x = np.vstack([outer, inner])
    x = x + noise * rng.standard_normal(x.shape)
    labels = np.concatenate([np.zeros(n_out, dtype=np.int64), np.ones(n_in, dtype=np.int64)])
    return SampleDataset(x, labels, origin=f"moons(n={n},seed={seed})")


def gen_circles(n: int, noise: float = 0.05, radius_ratio: float = 0.5,
                seed=None) -> SampleDataset:
    """Two concentric circles of radius 1.0 (label 0) and radius_ratio (label 1)."""
    rng = np.random.default_rng(seed)
    if noise < 0:
        raise C2mError(f"noise must be non-negative, got {noise}")
    if not 0.0 < radius_ratio < 1.0:
        raise C2mError(f"radius ratio must be in (0, 1), got {radius_ratio}")
    n_out = n - n // 2
    n_in = n // 2
    t_out = rng.uniform(0.0, 2.0 * np.pi, size=n_out)
    t_in = rng.uniform(0.0, 2.0 * np.pi, size=n_in)
    outer = np.column_stack([np.cos(t_out), np.sin(t_out)])
    inner = radius_ratio * np.column_stack([np.cos(t_in), np.sin(t_in)])
    x = np.vstack([outer, inner])
    x = x + noise * rng.standard_normal(x.shape)
    labels = np.concatenate([np.zeros(n_out, dtype=np.int64), np.ones(n_in, dtype=np.int64)])
    return SampleDataset(x, labels, origin=f"circles(n={n},seed={seed})")


# --- protocol operations ----------------------------------------------------

def subsample(pool: SampleDataset, size: int, seed=None, max_retries: int = 100) -> SampleDataset:
    """Uniform sample without replacement, keeping at least 2 distinct labels."""
    if size > pool.n:
        raise C2mError(f"cannot draw {size} points from a pool of {pool.n}")
    if pool.labels is None:
        raise C2mError("subsample requires a labelled pool")
    if len(np.unique(pool.labels)) < 2:
        raise C2mError("pool has fewer than 2 distinct labels")
    rng = np.random.default_rng(seed)
    for _ in range(max_retries):
        idx = rng.choice(pool.n, size=size, replace=False)
        if len(np.unique(pool.labels[idx])) >= 2:
            return SampleDataset(pool.x[idx], pool.labels[idx],
                                 origin=pool.origin + f"+subsample({size},seed={seed})")
    raise C2mError(f"could not draw {size} points with 2 distinct labels "
                   f"after {max_retries} tries")


def corrupt(ds: SampleDataset, mislabel_count: int, seed=None) -> SampleDataset:
    """Reassign exactly ``mislabel_count`` points to a different random label.

    Replacement labels are drawn uniformly from the other labels already
    present in the dataset, so the hamming distance to the original labeling
    is exactly ``mislabel_count``.
    """
    if ds.labels is None:
        raise C2mError("corrupt requires a labelled dataset")
    if not 0 <= mislabel_count <= ds.n:
        raise C2mError(f"mislabel count must be in [0, {ds.n}], got {mislabel_count}")
    alphabet = np.unique(ds.labels)
    if len(alphabet) < 2:
        raise C2mError("cannot mislabel: only one label present")
    rng = np.random.default_rng(seed)
    labels = ds.labels.copy()
    chosen = rng.choice(ds.n, size=mislabel_count, replace=False)
    for i in chosen:
        others = alphabet[alphabet != labels[i]]
        labels[i] = rng.choice(others)
    return SampleDataset(ds.x, labels, origin=ds.origin + f"+mislabel({mislabel_count})")


def _random_squeeze(rng: np.random.Generator) -> np.ndarray:
    """Random rotation / axis squeeze / rotation with a controlled condition number."""
    a, b = rng.uniform(0.0, np.pi, size=2)
    s = rng.uniform(0.4, 0.8)
    rot1 = np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]])
    rot2 = np.array([[np.cos(b), -np.sin(b)], [np.sin(b), np.cos(b)]])
    return rot1 @ np.diag([1.0, s]) @ rot2


def _pool_for(family: str, pool_size: int, seed, rng: np.random.Generator) -> SampleDataset:
    if family == "blobs":
        k = int(rng.integers(MIN_CLUSTERS, MAX_CLUSTERS + 1))
        return gen_blobs(pool_size, k=k, seed=seed)
    if family == "anisotropic":
        k = int(rng.integers(MIN_CLUSTERS, MAX_CLUSTERS + 1))
        return gen_anisotropic(pool_size, k=k, transform=_random_squeeze(rng), seed=seed)
    if family == "moons":
        return gen_moons(pool_size, seed=seed)
    if family == "circles":
        return gen_circles(pool_size, seed=seed)
    raise C2mError(f"unknown family '{family}' (choose from {', '.join(FAMILIES)})")


def build_corpus(family: str, samples: int, points: int = 200, pools: int | None = None,
                 pool_size: int = 1500, seed=0, role: str = "train") -> Corpus:
    """Generate pools of one family and subsample labelled sample datasets.

    ``pools`` defaults to one pool per sample dataset so cluster counts and
    geometry vary across the corpus; pass ``pools=1`` to subsample everything
    from a single source.
    """
    if samples < 1 or points < 2:
        raise C2mError("need at least 1 sample dataset of at least 2 points")
    if pools is None:
        pools = samples
    if pool_size < points:
        raise C2mError(f"pool size {pool_size} smaller than sample size {points}")
    master = np.random.default_rng(seed)
    pool_seeds = master.integers(0, 2**63 - 1, size=pools)
    draw_seeds = master.integers(0, 2**63 - 1, size=samples)
    pool_list = [_pool_for(family, pool_size, int(pool_seeds[j]), master)
                 for j in range(pools)]
    datasets = [subsample(pool_list[i % pools], points, seed=int(draw_seeds[i]))
                for i in range(samples)]
    return Corpus(datasets, role=role)


# --- persistence ------------------------------------------------------------

def save_dataset(ds: SampleDataset, path) -> None:
    """Write one dataset as CSV: columns f0..f{d-1}, plus 'label' when present."""
    path = Path(path)
    header = [f"f{j}" for j in range(ds.d)]
    if ds.labels is not None:
        header.append("label")
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(ds.n):
            row = [repr(float(v)) for v in ds.x[i]]
            if ds.labels is not None:
                row.append(str(int(ds.labels[i])))
            writer.writerow(row)


def load_dataset(path) -> SampleDataset:
    """Read a dataset CSV written by :func:`save_dataset` (label column optional)."""
    path = Path(path)
    with path.open("r", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataFormatError(f"{path}: empty file")
    header = rows[0]
    has_label = bool(header) and header[-1] == "label"
    feat_names = header[:-1] if has_label else header
    d = len(feat_names)
    if d < 1 or feat_names != [f"f{j}" for j in range(d)]:
        raise DataFormatError(f"{path}: line 1: bad header {header!r}")
    width = d + (1 if has_label else 0)
    x = np.empty((len(rows) - 1, d))
    labels = np.empty(len(rows) - 1, dtype=np.int64) if has_label else None
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise DataFormatError(f"{path}: line {i}: expected {width} fields, got {len(row)}")
        try:
            x[i - 2] = [float(v) for v in row[:d]]
            if has_label:
                labels[i - 2] = int(row[d])
        except ValueError as exc:
            raise DataFormatError(f"{path}: line {i}: {exc}") from exc
    return SampleDataset(x, labels, origin=str(path))


def save_corpus(corpus: Corpus, out_dir, manifest_name: str = "manifest.json",
                prefix: str = "dataset") -> Path:
    """Write every dataset as CSV plus a JSON manifest; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, ds in enumerate(corpus.datasets):
        name = f"{prefix}_{i:03d}.csv"
        save_dataset(ds, out_dir / name)
        entries.append({"path": name, "role": corpus.role, "origin": ds.origin})
    manifest = out_dir / manifest_name
    manifest.write_text(json.dumps(entries, indent=2) + "\n")
    return manifest


def load_corpus(manifest_path) -> Corpus:
    """Load a corpus from a JSON manifest of {path, role, origin} entries."""
    manifest_path = Path(manifest_path)
    try:
        entries = json.loads(manifest_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataFormatError(f"{manifest_path}: cannot read manifest: {exc}") from exc
    if not isinstance(entries, list) or not entries:
        raise DataFormatError(f"{manifest_path}: manifest must be a non-empty JSON array")
    datasets = []
    role = None
    for e in entries:
        if not isinstance(e, dict) or "path" not in e:
            raise DataFormatError(f"{manifest_path}: manifest entry missing 'path': {e!r}")
        ds = load_dataset(manifest_path.parent / e["path"])
        ds.origin = e.get("origin", ds.origin)
        datasets.append(ds)
        role = role or e.get("role")
    return Corpus(datasets, role=role or "train")
