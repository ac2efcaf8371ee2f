"""Run reports and their JSON form."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

SCHEMA_VERSION = 1

REPORT_KEYS = (
    "schema",
    "algorithm",
    "seed",
    "config",
    "converged",
    "n_iterations",
    "init_queries",
    "iterations",
    "accuracy",
    "timings",
    "transcript",
)


@dataclass
class RunReport:
    algorithm: str
    config: dict
    iterations: list = field(default_factory=list)
    n_iterations: int = 0
    converged: bool = False
    init_queries: int = 0
    accuracy: float | None = None
    timings: dict = field(default_factory=dict)
    transcript: dict = field(default_factory=dict)
    seed: int | None = None
    # in-memory only
    trajectory: list = field(default_factory=list, repr=False)
    labels: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "algorithm": self.algorithm,
            "seed": self.seed,
            "config": _plain(self.config),
            "converged": bool(self.converged),
            "n_iterations": int(self.n_iterations),
            "init_queries": int(self.init_queries),
            "iterations": _plain(self.iterations),
            "accuracy": None if self.accuracy is None else float(self.accuracy),
            "timings": _plain(self.timings),
            "transcript": _plain(self.transcript),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        if d.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema {d.get('schema')!r}")
        return cls(
            algorithm=d["algorithm"],
            config=d["config"],
            iterations=d["iterations"],
            n_iterations=d["n_iterations"],
            converged=d["converged"],
            init_queries=d["init_queries"],
            accuracy=d["accuracy"],
            timings=d["timings"],
            transcript=d["transcript"],
            seed=d["seed"],
        )


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj
