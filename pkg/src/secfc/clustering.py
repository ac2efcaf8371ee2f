"""Plaintext k-means: loss, Lloyd iterations and center-separation seeding.

All comparisons use squared Euclidean distances.  A distance matrix has one
column per cluster and ``+inf`` in the column of an empty cluster, which
freezes that cluster for the rest of the run.  Nearest-center ties go to
the lowest cluster index (``np.argmin`` semantics).

The seeding routine only ever talks to a *distance query* callable, so the
SecFC server can drive it with decoded coded distances while the plaintext
baselines drive it with :func:`plaintext_query`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

DistanceQuery = Callable[[np.ndarray, int], np.ndarray]

_INT64_SAFE = 1 << 62


@dataclass
class Dataset:
    points: np.ndarray
    labels: np.ndarray | None = None
    ids: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.asarray(self.points)
        if pts.ndim == 1 and pts.size == 0:
            pts = pts.reshape(0, int(self.meta.get("d", 0)))
        if pts.ndim != 2:
            raise ValueError("points must be an (m, d) array")
        self.points = pts
        m = pts.shape[0]
        if self.ids is None:
            self.ids = np.array([str(i) for i in range(m)], dtype=object)
        else:
            self.ids = np.asarray(self.ids, dtype=object)
        if len(self.ids) != m:
            raise ValueError("ids and points differ in length")
        if len(set(self.ids.tolist())) != m:
            raise ValueError("data-point ids must be unique")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (m,):
                raise ValueError("labels and points differ in length")

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        labels = None if self.labels is None else self.labels[idx]
        return Dataset(self.points[idx], labels, self.ids[idx], dict(self.meta))


@dataclass(eq=False)
class ClusterAssignment:
    """A k-partition of the data indices.

    ``core`` optionally flags the points whose labels came from the
    center-separation rule; only they define the next centers.
    """

    labels: np.ndarray
    k: int
    core: np.ndarray | None = None

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.ndim != 1:
            raise ValueError("labels must be one-dimensional")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.k):
            raise ValueError(f"labels must lie in [0, {self.k})")

    def __eq__(self, other):
        if not isinstance(other, ClusterAssignment):
            return NotImplemented
        return self.k == other.k and np.array_equal(self.labels, other.labels)

    def __len__(self):
        return len(self.labels)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)

    def center_groups(self) -> np.ndarray:
        """Per-point group ids that define centers; -1 marks non-contributors."""
        if self.core is None:
            return self.labels.copy()
        return np.where(self.core, self.labels, -1)


def scaled_distances(dprime, sizes, scale: float = 1.0) -> np.ndarray:
    """``dprime / (scale * size**2)`` as float64, +inf for empty groups.

    Both the plaintext oracle and the SecFC server call this on the same
    exact integers, so their float distances agree bit for bit.
    """
    dprime = np.asarray(dprime)
    sizes = np.asarray(sizes, dtype=np.int64)
    denom = float(scale) * sizes.astype(np.float64) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        out = dprime.astype(np.float64) / denom[None, :]
    out[:, sizes == 0] = np.inf
    return out


def group_distances(points, groups, num_groups: int, scale: float = 1.0) -> np.ndarray:
    """Squared distances from every point to the mean of every group.

    Integer points take an exact path: ``||sum_S x - |S| x_i||^2`` in
    integers, then :func:`scaled_distances`.  Float points use the means.
    """
    X = np.asarray(points)
    groups = np.asarray(groups, dtype=np.int64)
    m = X.shape[0]
    sizes = np.bincount(groups[groups >= 0], minlength=num_groups)[:num_groups]
    if X.dtype.kind in "iu":
        return scaled_distances(_exact_dprime(X, groups, num_groups, sizes), sizes, scale)
    X = X.astype(np.float64)
    out = np.full((m, num_groups), np.inf)
    for g in range(num_groups):
        if sizes[g]:
            mu = X[groups == g].mean(axis=0)
            out[:, g] = ((X - mu) ** 2).sum(axis=1)
    if scale != 1.0:
        out = out / scale
    return out


def _exact_dprime(X, groups, num_groups, sizes):
    X = X.astype(np.int64)
    m, d = X.shape
    amax = int(np.abs(X).max()) if X.size else 0
    dtype = np.int64 if 4 * m * m * amax * amax * max(d, 1) < _INT64_SAFE else object
    X = X.astype(dtype)
    out = np.zeros((m, num_groups), dtype=dtype)
    for g in range(num_groups):
        if sizes[g]:
            total = X[groups == g].sum(axis=0)
            diff = total[None, :] - int(sizes[g]) * X
            out[:, g] = (diff * diff).sum(axis=1)
    return out


def plaintext_query(points, scale: float = 1.0) -> DistanceQuery:
    def query(groups, num_groups):
        return group_distances(points, groups, num_groups, scale)

    return query


def nearest(distances) -> np.ndarray:
    D = np.asarray(distances)
    if D.shape[0] and not np.all(np.isfinite(D).any(axis=1)):
        raise ValueError("every cluster is empty")
    return np.argmin(D, axis=1).astype(np.int64)


def clustering_loss(data: Dataset, s: ClusterAssignment) -> float:
    """Sum over clusters of squared distances to the cluster mean."""
    X = np.asarray(data.points, dtype=np.float64)
    if X.shape[0] == 0:
        raise ValueError("empty dataset")
    total = 0.0
    for h in range(s.k):
        members = X[s.labels == h]
        if len(members):
            total += float(((members - members.mean(axis=0)) ** 2).sum())
    return total


def lloyd_step(data: Dataset, s: ClusterAssignment, scale: float = 1.0) -> ClusterAssignment:
    D = group_distances(data.points, s.labels, s.k, scale)
    return ClusterAssignment(nearest(D), s.k)


class LloydResult(NamedTuple):
    assignment: ClusterAssignment
    iterations: int
    loss_trace: list
    trajectory: list
    converged: bool


def lloyd_run(data: Dataset, init: ClusterAssignment, max_iters: int = 100, scale: float = 1.0) -> LloydResult:
    """Iterate assignment/update until the partition stops changing.

    ``loss_trace[i]`` is the loss of the partition fed to step ``i`` and
    ``trajectory[i]`` the labels that step produced.  A converged input
    takes exactly one step.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    s = init
    losses, trajectory = [], []
    for it in range(1, max_iters + 1):
        D = group_distances(data.points, s.labels, s.k, scale)
        losses.append(float(D[np.arange(len(s.labels)), s.labels].sum()))
        new = ClusterAssignment(nearest(D), s.k)
        trajectory.append(new.labels)
        if new == s:
            return LloydResult(new, it, losses, trajectory, True)
        s = new
    return LloydResult(s, max_iters, losses, trajectory, False)


def separation_cores(distances) -> np.ndarray:
    """Index h with d(i,h) <= d(i,s)/9 for all s != h, else -1.

    Works on squared distances, so the factor 1/3 on norms becomes 1/9.
    """
    D = np.asarray(distances, dtype=np.float64)
    m, k = D.shape
    if k == 1:
        return np.zeros(m, dtype=np.int64)
    order = np.argsort(D, axis=1, kind="stable")
    rows = np.arange(m)
    best = D[rows, order[:, 0]]
    second = D[rows, order[:, 1]]
    ok = np.isfinite(best) & (9.0 * best <= second)
    return np.where(ok, order[:, 0], -1).astype(np.int64)


def center_separation_init(distances, current: ClusterAssignment) -> ClusterAssignment:
    """One-shot separation refinement computed from distances alone.

    Points deep inside some cluster's region take that cluster; the rest
    keep their current label.  ``core`` marks the former.
    """
    cores = separation_cores(distances)
    core = cores >= 0
    labels = np.where(core, cores, current.labels)
    return ClusterAssignment(labels, current.k, core=core)


def seed_assignment(query: DistanceQuery, m: int, k: int, rng: np.random.Generator, n_trials: int | None = None) -> ClusterAssignment:
    """Randomized initial partition from distance queries only.

    Greedy D^2 seeding picks ``k`` data points as provisional centers
    (``n_trials`` candidates per round, keeping the one that lowers the
    potential most), center separation keeps each seed's unambiguous points,
    and the returned partition assigns every point to the nearest mean of
    those cores.
    """
    if m < k:
        raise ValueError(f"cannot seed {k} clusters from {m} points")
    if n_trials is None:
        n_trials = 2 + int(np.log(k))
    seeds = [int(rng.integers(m))]
    groups = np.full(m, -1, dtype=np.int64)
    groups[seeds[0]] = 0
    cur = query(groups, 1)[:, 0]
    for _ in range(1, k):
        total = float(cur.sum())
        if total > 0 and np.isfinite(total):
            p = cur / total
        else:
            p = np.ones(m)
            p[seeds] = 0.0
            p /= p.sum()
        cand = list(dict.fromkeys(int(c) for c in rng.choice(m, size=n_trials, p=p)))
        groups = np.full(m, -1, dtype=np.int64)
        groups[cand] = np.arange(len(cand))
        Dc = np.minimum(cur[:, None], query(groups, len(cand)))
        best = int(np.argmin(Dc.sum(axis=0)))
        seeds.append(cand[best])
        cur = Dc[:, best]

    groups = np.full(m, -1, dtype=np.int64)
    groups[seeds] = np.arange(k)
    D = query(groups, k)
    sep = center_separation_init(D, ClusterAssignment(nearest(D), k))
    centers = sep.center_groups()
    for h in range(k):
        if not np.any(centers == h):
            centers[seeds[h]] = h
    return ClusterAssignment(nearest(query(centers, k)), k)
