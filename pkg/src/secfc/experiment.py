"""Reproducible experiment runs for every algorithm."""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace

import numpy as np

from .baselines import KFedConfig, kfed_run, lloyd_baseline
from .clustering import Dataset
from .codec import QuantizerConfig, max_safe_lambda, quantize, validate_headroom
from .datagen import MixtureConfig, PartitionConfig, generate_mixture, load_csv, partition_to_clients
from .errors import ConfigError
from .evaluation import hungarian_match
from .field import DEFAULT_MODULUS, PrimeField
from .protocol import (
    ClientState,
    ProtocolConfig,
    TranscriptLog,
    make_clients,
    membership_share_phase,
    psu_align,
    secfc_run,
    share_phase,
)

ALGORITHMS = ("lloyd", "kfed", "secfc", "secfc-mp")


@dataclass(frozen=True)
class ExperimentSpec:
    algorithm: str = "secfc"
    k: int = 4
    # synthetic data, ignored when csv is set
    m: int = 1000
    d: int = 100
    sigma: float = 1.0
    center_box: float = 10.0
    csv: str | None = None
    # federation
    n: int = 10
    k_prime: int | None = None
    # protocol
    t: int = 3
    ell: int = 2
    lam: float | str = "auto"
    q: int = DEFAULT_MODULUS
    decode_client_count: int | None = None
    workers: int = 1
    max_iters: int = 100
    runs: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm must be one of {', '.join(ALGORITHMS)}, got {self.algorithm!r}")
        if self.k < 1 or self.runs < 1 or self.max_iters < 1 or self.n < 1:
            raise ConfigError("k, n, runs and max_iters must be >= 1")
        if self.k_prime is None:
            object.__setattr__(self, "k_prime", self.k)
        if not 1 <= self.k_prime <= self.k:
            raise ConfigError(f"need 1 <= k_prime <= k, got k_prime={self.k_prime}")
        if self.algorithm != "lloyd" and self.n * self.k_prime < self.k:
            raise ConfigError(f"infeasible partition: n*k' = {self.n * self.k_prime} < k = {self.k}")
        if isinstance(self.lam, str) and self.lam != "auto":
            try:
                object.__setattr__(self, "lam", float(self.lam))
            except ValueError:
                raise ConfigError(f"lam must be a number or 'auto', got {self.lam!r}") from None
        if self.secure:
            if self.t < 1 or self.ell < 1:
                raise ConfigError("need t >= 1 and ell >= 1")
            need = 2 * self.t + 2 * self.ell - 1
            if need > self.n:
                raise ConfigError(f"privacy condition violated: 2t + 2ell - 1 = {need} > n = {self.n}")
            if self.csv is None and self.d % self.ell:
                raise ConfigError(f"dimension {self.d} is not divisible by ell = {self.ell}")
            PrimeField(self.q)

    @property
    def secure(self) -> bool:
        return self.algorithm.startswith("secfc")

    def to_dict(self) -> dict:
        return asdict(self)


def run_seed(spec: ExperimentSpec, run_index: int) -> int:
    return spec.seed + run_index


def load_data(spec: ExperimentSpec, seed: int) -> Dataset:
    if spec.csv is not None:
        return load_csv(spec.csv)
    return generate_mixture(MixtureConfig(spec.k, spec.m, spec.d, spec.sigma, spec.center_box, seed))


def resolve_quantizer(spec: ExperimentSpec, data: Dataset) -> QuantizerConfig:
    max_abs = float(np.abs(data.points).max()) if data.m else 0.0
    if spec.lam == "auto":
        lam = max_safe_lambda(spec.q, max_abs, data.d, data.m)
    else:
        lam = float(spec.lam)
    cfg = QuantizerConfig(lam, spec.q)
    validate_headroom(cfg, max_abs, data.d, data.m)
    return cfg


def protocol_config(spec: ExperimentSpec, quant: QuantizerConfig, seed: int) -> ProtocolConfig:
    return ProtocolConfig(
        n=spec.n, k=spec.k, t=spec.t, ell=spec.ell, max_iters=spec.max_iters,
        field=PrimeField(spec.q), quant=quant, decode_client_count=spec.decode_client_count,
        rng_seed=seed, workers=spec.workers,
    )


def _secfc(spec, data, seed, membership: bool):
    quant = resolve_quantizer(spec, data)
    cfg = protocol_config(spec, quant, seed)
    _, owners = partition_to_clients(data, PartitionConfig(spec.n, spec.k_prime, seed), spec.k)
    Q = quantize(data.points, quant)
    share_rng = np.random.default_rng([seed, 1])
    init_rng = np.random.default_rng([seed, 2])
    transcript = TranscriptLog()
    if not membership:
        clients, _ = share_phase(make_clients(Q, owners), cfg, rng=share_rng, transcript=transcript)
        assignment, report = secfc_run(clients, cfg, rng=init_rng, transcript=transcript)
        labels = assignment.labels
    else:
        union, maps = psu_align([data.ids[ix].tolist() for ix in owners], transcript)
        clients = []
        for j, ix in enumerate(owners):
            gidx = np.array([maps[j][e] for e in data.ids[ix]], dtype=np.int64)
            clients.append(ClientState(j, gidx, Q[ix]))
        membership_share_phase(clients, cfg, len(union), rng=share_rng, transcript=transcript)
        assignment, report = secfc_run(clients, cfg, rng=init_rng, transcript=transcript)
        # back from union order to dataset order
        pos = {e: i for i, e in enumerate(union)}
        labels = assignment.labels[[pos[e] for e in data.ids]]
        report.algorithm = "secfc-mp"
    report.labels = labels
    return labels, report


def run_once(spec: ExperimentSpec, data: Dataset, seed: int):
    if spec.algorithm == "lloyd":
        assignment, report = lloyd_baseline(data, spec.k, np.random.default_rng([seed, 2]), spec.max_iters)
        labels = assignment.labels
    elif spec.algorithm == "kfed":
        parts, owners = partition_to_clients(data, PartitionConfig(spec.n, spec.k_prime, seed), spec.k)
        keep = [i for i, p in enumerate(parts) if p.m]
        assignment, report = kfed_run([parts[i] for i in keep], KFedConfig(spec.k, spec.k_prime, spec.max_iters),
                                      np.random.default_rng([seed, 2]), indices=[owners[i] for i in keep])
        labels = assignment.labels
    else:
        labels, report = _secfc(spec, data, seed, spec.algorithm == "secfc-mp")
    if data.labels is not None and data.m:
        report.accuracy = hungarian_match(data.labels, labels, spec.k).accuracy
    report.seed = seed
    report.config = {**spec.to_dict(), **report.config, "seed": seed}
    return report


def run_experiment(spec: ExperimentSpec, on_report=None) -> list:
    """Run ``spec.runs`` repetitions with seeds ``seed, seed + 1, ...``."""
    reports = []
    base = load_data(spec, spec.seed) if spec.csv is not None else None
    for r in range(spec.runs):
        seed = run_seed(spec, r)
        data = base if base is not None else load_data(spec, seed)
        if data.m == 0:
            raise ConfigError("dataset is empty")
        rep = run_once(spec, data, seed)
        reports.append(rep)
        if on_report is not None:
            on_report(r, rep)
    return reports


def with_algorithm(spec: ExperimentSpec, algorithm: str, **changes) -> ExperimentSpec:
    return replace(spec, algorithm=algorithm, **changes)
