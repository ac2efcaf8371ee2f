"""Plaintext comparison algorithms: centralized Lloyd and one-shot k-FED."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .clustering import ClusterAssignment, Dataset, lloyd_run, plaintext_query, seed_assignment
from .errors import ConfigError
from .protocol import SERVER, TranscriptLog, client_name
from .report import RunReport

KFED_KINDS = frozenset({"local_centers"})


def seeded_lloyd(points, k: int, rng: np.random.Generator, max_iters: int = 100, scale: float = 1.0):
    """Seeding through plaintext distance queries, then Lloyd to convergence."""
    data = points if isinstance(points, Dataset) else Dataset(points)
    init = seed_assignment(plaintext_query(data.points, scale), data.m, k, rng)
    return lloyd_run(data, init, max_iters, scale)


def lloyd_baseline(data: Dataset, k: int, rng: np.random.Generator, max_iters: int = 100):
    t0 = time.perf_counter()
    res = seeded_lloyd(data, k, rng, max_iters)
    elapsed = time.perf_counter() - t0
    report = RunReport(
        algorithm="lloyd",
        config={"k": k, "max_iters": max_iters},
        iterations=[{"loss": loss} for loss in res.loss_trace],
        n_iterations=res.iterations,
        converged=res.converged,
        timings={"overall": elapsed},
        trajectory=res.trajectory,
        labels=res.assignment.labels,
    )
    return res.assignment, report


@dataclass(frozen=True)
class KFedConfig:
    k: int
    k_prime: int
    max_iters: int = 100

    def __post_init__(self):
        if not 1 <= self.k_prime <= self.k:
            raise ConfigError(f"need 1 <= k_prime <= k, got k_prime={self.k_prime}, k={self.k}")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be >= 1")


def _centers(X, labels, k):
    return np.array([X[labels == h].mean(axis=0) for h in range(k) if np.any(labels == h)])


def kfed_run(clients, cfg: KFedConfig, rng: np.random.Generator | None = None,
             transcript: TranscriptLog | None = None, indices=None):
    """Local Lloyd per client, one upload of centers, server Lloyd on the centers.

    Labels come back in the order of ``indices`` (global position of each
    client's points) or, without it, in client-concatenation order.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    if transcript is None:
        transcript = TranscriptLog(KFED_KINDS)
    if not clients:
        raise ConfigError("k-FED needs at least one client")
    if any(c.m == 0 for c in clients):
        raise ConfigError("every k-FED client must hold data")
    client_times, pooled, local_labels = [], [], []
    for j, data in enumerate(clients):
        t0 = time.perf_counter()
        kj = min(cfg.k_prime, data.m)
        res = seeded_lloyd(np.asarray(data.points, dtype=np.float64), kj, rng, cfg.max_iters)
        # renumber non-empty local clusters 0..c-1 so they line up with the centers
        used, lab = np.unique(res.assignment.labels, return_inverse=True)
        C = _centers(np.asarray(data.points, dtype=np.float64), lab, len(used))
        client_times.append(time.perf_counter() - t0)
        transcript.record("kfed", client_name(j), SERVER, "local_centers", len(C), C.size * 8)
        local_labels.append(lab + len(pooled))
        pooled.extend(C)

    t0 = time.perf_counter()
    pooled = np.array(pooled)
    kk = min(cfg.k, len(pooled))
    server = seeded_lloyd(pooled, kk, rng, cfg.max_iters)
    server_time = time.perf_counter() - t0

    labels = server.assignment.labels[np.concatenate(local_labels)]
    if indices is not None:
        order = np.concatenate([np.asarray(ix, dtype=np.int64) for ix in indices])
        out = np.empty_like(labels)
        out[order] = labels
        labels = out
    assignment = ClusterAssignment(labels, cfg.k)
    report = RunReport(
        algorithm="kfed",
        config={"k": cfg.k, "k_prime": cfg.k_prime, "max_iters": cfg.max_iters, "active_clients": len(clients)},
        iterations=[{"loss": loss} for loss in server.loss_trace],
        n_iterations=server.iterations,
        converged=server.converged,
        timings={
            "client_mean": float(np.mean(client_times)),
            "client_max": float(np.max(client_times)),
            "server": server_time,
            # clients run concurrently, so the slowest one bounds the wall clock
            "overall": float(np.max(client_times)) + server_time,
        },
        transcript=transcript.summary(),
        labels=labels,
    )
    return assignment, report
