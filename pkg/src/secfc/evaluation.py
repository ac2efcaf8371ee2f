"""Clustering accuracy under the best label matching, and run aggregation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment


@dataclass(frozen=True)
class AccuracyResult:
    accuracy: float
    permutation: np.ndarray  # permutation[predicted] = matched true label
    confusion: np.ndarray  # confusion[predicted, true]


def confusion_matrix(truth, predicted, k: int) -> np.ndarray:
    truth = np.asarray(truth, dtype=np.int64)
    predicted = np.asarray(predicted, dtype=np.int64)
    if truth.shape != predicted.shape or truth.ndim != 1:
        raise ValueError("label vectors must be one-dimensional and of equal length")
    for name, v in (("truth", truth), ("predicted", predicted)):
        if v.size and (v.min() < 0 or v.max() >= k):
            raise ValueError(f"{name} labels must lie in [0, {k})")
    C = np.zeros((k, k), dtype=np.int64)
    np.add.at(C, (predicted, truth), 1)
    return C


def hungarian_match(truth, predicted, k: int) -> AccuracyResult:
    C = confusion_matrix(truth, predicted, k)
    m = int(C.sum())
    if m == 0:
        raise ValueError("cannot score an empty labeling")
    rows, cols = linear_sum_assignment(C, maximize=True)
    perm = np.empty(k, dtype=np.int64)
    perm[rows] = cols
    return AccuracyResult(float(C[rows, cols].sum()) / m, perm, C)


def mean_std(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("no values")
    return float(v.mean()), float(v.std(ddof=1)) if v.size > 1 else 0.0


def aggregate_runs(reports) -> dict:
    """Mean and sample std of accuracy, mean of every scalar timing."""
    reports = list(reports)
    if not reports:
        raise ValueError("need at least one report")
    accs = [r.accuracy for r in reports if r.accuracy is not None]
    out = {
        "algorithm": reports[0].algorithm,
        "runs": len(reports),
        "accuracy_mean": None,
        "accuracy_std": None,
        "iterations_mean": float(np.mean([r.n_iterations for r in reports])),
        "timings": {},
    }
    if accs:
        out["accuracy_mean"], out["accuracy_std"] = mean_std(accs)
    keys = [key for key, v in reports[0].timings.items() if isinstance(v, (int, float))]
    for key in keys:
        vals = [r.timings[key] for r in reports if isinstance(r.timings.get(key), (int, float))]
        out["timings"][key] = float(np.mean(vals))
    return out
