"""Synthetic Gaussian mixtures, heterogeneous client splits and CSV I/O."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .clustering import Dataset
from .errors import ConfigError, DataFormatError


@dataclass(frozen=True)
class MixtureConfig:
    k: int
    m: int
    d: int
    sigma: float
    center_box: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.k < 1 or self.m < 0 or self.d < 1:
            raise ConfigError("need k >= 1, m >= 0 and d >= 1")
        if not self.sigma > 0:
            raise ConfigError(f"sigma must be positive, got {self.sigma}")
        if not self.center_box > 0:
            raise ConfigError("center_box must be positive")


@dataclass(frozen=True)
class PartitionConfig:
    n: int
    k_prime: int
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("need at least one client")
        if self.k_prime < 1:
            raise ConfigError(f"k_prime must be >= 1, got {self.k_prime}")


def generate_mixture(cfg: MixtureConfig) -> Dataset:
    """Balanced isotropic mixture; each label is the index of the nearest center.

    Centers are uniform in ``[-center_box, center_box]^d``.
    """
    rng = np.random.default_rng(cfg.seed)
    while True:
        centers = rng.uniform(-cfg.center_box, cfg.center_box, size=(cfg.k, cfg.d))
        if len(np.unique(centers, axis=0)) == cfg.k:
            break
    comp = np.arange(cfg.m) % cfg.k
    rng.shuffle(comp)
    X = centers[comp] + rng.normal(0.0, cfg.sigma, size=(cfg.m, cfg.d))
    d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1) if cfg.m else np.zeros(0, dtype=np.int64)
    meta = {**asdict(cfg), "centers": centers.tolist(), "components": comp.tolist()}
    meta.update(feature_stats(X))
    return Dataset(X, labels, meta=meta)


def feature_stats(X) -> dict:
    X = np.asarray(X, dtype=np.float64)
    if X.size == 0:
        return {"feature_min": None, "feature_max": None, "max_abs": 0.0}
    return {
        "feature_min": float(X.min()),
        "feature_max": float(X.max()),
        "max_abs": float(np.abs(X).max()),
    }


def cluster_holders(k: int, cfg: PartitionConfig) -> list[list[int]]:
    """Clients holding each cluster: client j takes (j*k' + r) mod k, r < k'."""
    k_prime = min(cfg.k_prime, k)
    if cfg.n * k_prime < k:
        raise ConfigError(f"infeasible partition: n*k' = {cfg.n * k_prime} < k = {k}")
    holders: list[list[int]] = [[] for _ in range(k)]
    for j in range(cfg.n):
        for h in sorted({(j * k_prime + r) % k for r in range(k_prime)}):
            holders[h].append(j)
    return holders


def client_indices(labels, k: int, cfg: PartitionConfig) -> list[np.ndarray]:
    """Index sets per client; each cluster is shuffled and split evenly among its holders."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise ConfigError("labels out of range for partitioning")
    rng = np.random.default_rng(cfg.seed)
    parts: list[list[np.ndarray]] = [[] for _ in range(cfg.n)]
    for h, owners in enumerate(cluster_holders(k, cfg)):
        members = np.flatnonzero(labels == h)
        rng.shuffle(members)
        for j, chunk in zip(owners, np.array_split(members, len(owners))):
            parts[j].append(chunk)
    return [np.sort(np.concatenate(p)) if p else np.zeros(0, dtype=np.int64) for p in parts]


def partition_to_clients(data: Dataset, cfg: PartitionConfig, k: int | None = None):
    """Split a labeled dataset; returns ``(client_datasets, index_sets)``."""
    if data.labels is None:
        raise ConfigError("partitioning by cluster needs ground-truth labels")
    if k is None:
        k = int(data.meta.get("k", data.labels.max() + 1 if data.m else 1))
    idx = client_indices(data.labels, k, cfg)
    return [data.subset(ix) for ix in idx], idx


def write_csv(data: Dataset, path) -> Path:
    """Write ``id[,label],f_1..f_d`` rows plus a ``.meta.json`` sidecar."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        head = ["id"] + (["label"] if data.labels is not None else []) + [f"f_{i + 1}" for i in range(data.d)]
        w.writerow(head)
        for i in range(data.m):
            row = [data.ids[i]]
            if data.labels is not None:
                row.append(int(data.labels[i]))
            row.extend(repr(float(v)) for v in data.points[i])
            w.writerow(row)
    meta = {key: data.meta[key] for key in ("k", "m", "d", "sigma", "center_box", "seed") if key in data.meta}
    meta.update({"m": data.m, "d": data.d}, **feature_stats(data.points))
    sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def load_csv(path) -> Dataset:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = csv.reader(fh)
        try:
            header = [h.strip() for h in next(rows)]
        except StopIteration:
            raise DataFormatError("missing header", row=1) from None
        if not header or header[0] != "id":
            raise DataFormatError("first column must be 'id'", row=1)
        has_label = len(header) > 1 and header[1] == "label"
        first_f = 2 if has_label else 1
        d = len(header) - first_f
        if d < 1:
            raise DataFormatError("no feature columns", row=1)
        ids, labels, feats = [], [], []
        seen = set()
        for lineno, row in enumerate(rows, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataFormatError(f"expected {len(header)} fields, got {len(row)}", row=lineno)
            rid = row[0]
            if rid in seen:
                raise DataFormatError(f"duplicate id {rid!r}", row=lineno)
            seen.add(rid)
            try:
                vals = [float(v) for v in row[first_f:]]
            except ValueError:
                raise DataFormatError("non-numeric feature", row=lineno) from None
            if not all(math.isfinite(v) for v in vals):
                raise DataFormatError("non-finite feature", row=lineno)
            if has_label:
                try:
                    labels.append(int(row[1]))
                except ValueError:
                    raise DataFormatError(f"label {row[1]!r} is not an integer", row=lineno) from None
            ids.append(rid)
            feats.append(vals)
    meta = {}
    side = sidecar_path(path)
    if side.exists():
        meta = json.loads(side.read_text())
    meta["d"] = d
    points = np.array(feats, dtype=np.float64).reshape(len(feats), d)
    return Dataset(points, np.array(labels, dtype=np.int64) if has_label else None, np.array(ids, dtype=object), meta)
