"""In-process simulation of the SecFC protocol.

Clients hold Lagrange shares of every data point; in each round the server
broadcasts a grouping of the data indices, every client returns one coded
distance per (point, group), and the server interpolates the sums
``||sum_S x - |S| x_i||^2`` from any ``2ell + 2t - 1`` of those results.
The server never receives anything but these scalars, which is enforced
structurally by :class:`ServerState` and audited through
:class:`TranscriptLog`.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .clustering import ClusterAssignment, nearest, seed_assignment
from .codec import (
    QuantizerConfig,
    SharingParams,
    decode_batch,
    dequantize_distances,
    draw_noise,
    encode_points,
)
from .errors import ConfigError, DecodeError, ProtocolError, TranscriptError
from .field import EvalPoints, PrimeField
from .report import RunReport

SERVER = "server"
PSU = "psu"
ELEMENT_BYTES = 8
LABEL_BYTES = 4

SECFC_KINDS = frozenset({"share", "coded_distance", "assignment_broadcast", "id_set_union"})


def client_name(j: int) -> str:
    return f"client:{j}"


@dataclass(frozen=True)
class ProtocolConfig:
    n: int
    k: int
    t: int
    ell: int
    max_iters: int = 100
    field: PrimeField = field(default_factory=PrimeField)
    quant: QuantizerConfig | None = None
    eval_points: EvalPoints | None = None
    decode_client_count: int | None = None
    rng_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be >= 1")
        if self.quant is None:
            object.__setattr__(self, "quant", QuantizerConfig(2.0**10, self.field.q))
        if self.quant.q != self.field.q:
            raise ConfigError("quantizer and field disagree on q")
        sharing = self.sharing  # validates the privacy condition
        if self.decode_client_count is None:
            object.__setattr__(self, "decode_client_count", sharing.min_decoders)
        if not sharing.min_decoders <= self.decode_client_count <= self.n:
            raise ConfigError(
                f"decode_client_count must lie in [{sharing.min_decoders}, {self.n}], got {self.decode_client_count}"
            )

    @cached_property
    def sharing(self) -> SharingParams:
        return SharingParams(self.ell, self.t, self.n, self.field, self.eval_points)

    def decoders(self, available: Iterable[int]) -> tuple[int, ...]:
        """The first ``decode_client_count`` responding clients in index order."""
        avail = sorted(available)
        if len(avail) < self.decode_client_count:
            raise DecodeError(f"need {self.decode_client_count} client results, got {len(avail)}")
        return tuple(avail[: self.decode_client_count])

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "t": self.t,
            "ell": self.ell,
            "max_iters": self.max_iters,
            "q": self.field.q,
            "lam": self.quant.lam,
            "eval_points": self.sharing.eval_points.as_dict,
            "decode_client_count": self.decode_client_count,
            "rng_seed": self.rng_seed,
            "workers": self.workers,
            "backend": kernels.get_backend(),
        }


@dataclass
class ClientState:
    client_id: int
    indices: np.ndarray
    points: np.ndarray
    shares: np.ndarray | None = None
    coded_centers: np.ndarray | None = None
    timings: dict = field(default_factory=dict)

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)
        self.points = np.asarray(self.points, dtype=np.uint64)
        if self.points.ndim != 2 or len(self.points) != len(self.indices):
            raise ValueError("points must be (m_j, d) and match indices")


@dataclass(slots=True)
class ServerState:
    """Everything the server keeps: a partition, an (m, k) distance table, a counter."""

    assignment: ClusterAssignment | None = None
    distances: np.ndarray | None = None
    iteration: int = 0

    def update(self, assignment: ClusterAssignment, distances: np.ndarray) -> None:
        distances = np.asarray(distances, dtype=np.float64)
        if distances.shape != (len(assignment), assignment.k):
            raise ProtocolError("server distance table must be (m, k)")
        self.assignment = assignment
        self.distances = distances
        self.iteration += 1


@dataclass(frozen=True)
class Message:
    phase: str
    sender: str
    receiver: str
    kind: str
    count: int
    nbytes: int


class TranscriptLog:
    """Append-only record of simulated messages with a whitelist of payload kinds."""

    def __init__(self, allowed: Iterable[str] = SECFC_KINDS):
        self.allowed = frozenset(allowed)
        self.messages: list[Message] = []

    def record(self, phase, sender, receiver, kind, count, nbytes) -> None:
        if kind not in self.allowed:
            raise TranscriptError(f"payload kind {kind!r} is not permitted")
        self.messages.append(Message(phase, sender, receiver, kind, int(count), int(nbytes)))

    def validate(self) -> None:
        for msg in self.messages:
            if msg.kind not in self.allowed:
                raise TranscriptError(f"payload kind {msg.kind!r} is not permitted")

    def __len__(self):
        return len(self.messages)

    def bytes_by_kind(self) -> dict:
        out: dict[str, int] = {}
        for msg in self.messages:
            out[msg.kind] = out.get(msg.kind, 0) + msg.nbytes
        return out

    def bytes_sent(self) -> dict:
        out: dict[str, int] = {}
        for msg in self.messages:
            out[msg.sender] = out.get(msg.sender, 0) + msg.nbytes
        return out

    def summary(self) -> dict:
        return {
            "messages": len(self.messages),
            "bytes_by_kind": self.bytes_by_kind(),
            "bytes_sent": self.bytes_sent(),
        }


def audit_transcript(transcript: TranscriptLog) -> dict:
    """Check who may send what; raises :class:`TranscriptError` on a violation."""
    transcript.validate()
    counts: dict[str, int] = {}
    for msg in transcript.messages:
        client_to_client = msg.sender.startswith("client:") and msg.receiver.startswith("client:")
        ok = {
            "share": client_to_client,
            "coded_distance": msg.sender.startswith("client:") and msg.receiver == SERVER,
            "assignment_broadcast": msg.sender == SERVER and msg.receiver.startswith("client:"),
            "id_set_union": msg.sender == PSU and msg.receiver.startswith("client:"),
        }.get(msg.kind, False)
        if not ok:
            raise TranscriptError(f"{msg.kind} message from {msg.sender} to {msg.receiver} is not allowed")
        counts[msg.kind] = counts.get(msg.kind, 0) + 1
    return counts


def make_clients(points: np.ndarray, owners: Sequence[Sequence[int]]) -> list[ClientState]:
    """Client states from quantized ``(m, d)`` points and per-client index lists."""
    return [ClientState(j, np.asarray(ix, dtype=np.int64), points[np.asarray(ix, dtype=np.int64)]) for j, ix in enumerate(owners)]


def _check_partition(clients: Sequence[ClientState]) -> int:
    allidx = np.concatenate([c.indices for c in clients]) if clients else np.array([], dtype=np.int64)
    if len(np.unique(allidx)) != len(allidx):
        raise ProtocolError("a data index is owned by more than one client")
    m = len(allidx)
    if m and (allidx.min() != 0 or allidx.max() != m - 1):
        raise ProtocolError("client indices must cover 0..m-1")
    return m


def _dim(clients: Sequence[ClientState]) -> int:
    dims = {c.points.shape[1] for c in clients if len(c.points)}
    if len(dims) != 1:
        raise ProtocolError("clients disagree on the data dimension")
    return dims.pop()


def share_phase(clients, cfg: ProtocolConfig, rng=None, noise=None, transcript=None):
    """Every owner shares each of its points with every client.

    ``noise`` (``(m, t, d/ell)``, indexed by global point) replaces the
    random draw so tests can fix it.
    """
    if transcript is None:
        transcript = TranscriptLog()
    if len(clients) != cfg.n:
        raise ConfigError(f"expected {cfg.n} clients, got {len(clients)}")
    m = _check_partition(clients)
    d = _dim(clients)
    sp = cfg.sharing
    w = sp.width(d)
    if rng is None:
        rng = np.random.default_rng(cfg.rng_seed)
    for c in clients:
        c.shares = np.zeros((m, w), dtype=np.uint64)
    for c in clients:
        t0 = time.perf_counter()
        z = draw_noise(rng, len(c.indices), sp, w) if noise is None else np.asarray(noise, dtype=np.uint64)[c.indices]
        enc = encode_points(c.points, sp, z)
        c.timings["share"] = c.timings.get("share", 0.0) + time.perf_counter() - t0
        for holder in clients:
            holder.shares[c.indices] = enc[holder.client_id]
            if holder.client_id != c.client_id:
                transcript.record("share", client_name(c.client_id), client_name(holder.client_id), "share",
                                  len(c.indices), len(c.indices) * w * ELEMENT_BYTES)
    return clients, transcript


def psu_align(id_sets: Sequence[Iterable], transcript: TranscriptLog | None = None):
    """Simulated private set union.

    An ideal aggregator sees the sets and releases only their union, in
    sorted order; position in that list is the agreed global index.
    Returns ``(union, maps)`` where ``maps[j]`` sends client j's ids to
    global indices.
    """
    sets = [set(s) for s in id_sets]
    union = sorted(set().union(*sets)) if sets else []
    index = {e: i for i, e in enumerate(union)}
    if transcript is not None:
        nbytes = sum(len(str(e).encode()) for e in union)
        for j in range(len(sets)):
            transcript.record("psu", PSU, client_name(j), "id_set_union", len(union), nbytes)
    return union, [{e: index[e] for e in s} for s in sets]


def membership_share_phase(clients, cfg: ProtocolConfig, m: int, rng=None, noise=None, transcript=None):
    """Sharing that hides which client owns which point.

    Every client shares a real-or-zero version of all ``m`` points, and each
    holder sums the ``n`` shares it receives per point.  ``noise`` has shape
    ``(n, m, t, d/ell)`` when given.
    """
    if transcript is None:
        transcript = TranscriptLog()
    if len(clients) != cfg.n:
        raise ConfigError(f"expected {cfg.n} clients, got {len(clients)}")
    if _check_partition(clients) != m:
        raise ProtocolError("client indices do not cover the aligned id set")
    d = _dim(clients)
    sp = cfg.sharing
    w = sp.width(d)
    q = sp.q
    if rng is None:
        rng = np.random.default_rng(cfg.rng_seed)
    acc = np.zeros((cfg.n, m, w), dtype=np.uint64)
    for c in clients:
        t0 = time.perf_counter()
        padded = np.zeros((m, d), dtype=np.uint64)
        padded[c.indices] = c.points
        z = draw_noise(rng, m, sp, w) if noise is None else np.asarray(noise, dtype=np.uint64)[c.client_id]
        acc = kernels.add_mod(acc, encode_points(padded, sp, z), q)
        c.timings["share"] = c.timings.get("share", 0.0) + time.perf_counter() - t0
        for holder in clients:
            if holder.client_id != c.client_id:
                transcript.record("share", client_name(c.client_id), client_name(holder.client_id), "share",
                                  m, m * w * ELEMENT_BYTES)
    for c in clients:
        c.shares = acc[c.client_id]
    return clients, transcript


def coded_center_update(client: ClientState, groups, num_groups: int, q: int) -> np.ndarray:
    """Coded centers for a grouping, then one coded distance per (point, group)."""
    if client.shares is None:
        raise ProtocolError(f"client {client.client_id} holds no shares yet")
    sums, sizes = kernels.group_sums(client.shares, groups, num_groups, q)
    client.coded_centers = sums
    return kernels.coded_distances(client.shares, sums, sizes, q)


def server_decode_scaled(results: Mapping[int, np.ndarray], cfg: ProtocolConfig) -> np.ndarray:
    """Field values ``||sum_S x - |S| x_i||^2`` (quantized units) per (i, h)."""
    holders = cfg.decoders(results.keys())
    weights = _decode_weights(cfg, holders)
    return decode_batch(np.stack([results[j] for j in holders]), weights, cfg.field.q)


def server_decode_distances(results: Mapping[int, np.ndarray], sizes, cfg: ProtocolConfig) -> np.ndarray:
    """Real squared point-to-center distances; +inf columns for empty groups."""
    return dequantize_distances(server_decode_scaled(results, cfg), sizes, cfg.quant)


_WEIGHT_CACHE: dict = {}


def _decode_weights(cfg: ProtocolConfig, holders: tuple[int, ...]) -> np.ndarray:
    key = (cfg.sharing.ell, cfg.sharing.t, cfg.sharing.eval_points, holders)
    if key not in _WEIGHT_CACHE:
        _WEIGHT_CACHE[key] = cfg.sharing.decode_weights(holders)
    return _WEIGHT_CACHE[key]


class _Round:
    """One broadcast / compute / upload / decode exchange, with timing."""

    def __init__(self, clients, cfg, transcript):
        self.clients = clients
        self.cfg = cfg
        self.transcript = transcript
        self.m = clients[0].shares.shape[0]
        self.client_times: list[list[float]] = []
        self.server_times: list[float] = []
        self.phase = "init"
        # numba kernels parallelize internally, and its default threading
        # layer must not be entered from several Python threads at once
        threaded = cfg.workers > 1 and kernels.get_backend() == "numpy"
        self.pool = ThreadPoolExecutor(cfg.workers) if threaded else None

    def _client(self, c, groups, g):
        t0 = time.perf_counter()
        out = coded_center_update(c, groups, g, self.cfg.field.q)
        return c.client_id, out, time.perf_counter() - t0

    def __call__(self, groups, num_groups):
        groups = np.asarray(groups, dtype=np.int64)
        m = self.m
        for c in self.clients:
            self.transcript.record(self.phase, SERVER, client_name(c.client_id), "assignment_broadcast", m, m * LABEL_BYTES)
        if self.pool is None:
            outs = [self._client(c, groups, num_groups) for c in self.clients]
        else:
            outs = list(self.pool.map(lambda c: self._client(c, groups, num_groups), self.clients))
        results = {}
        times = []
        for cid, res, dt in outs:
            results[cid] = res
            times.append(dt)
            self.transcript.record(self.phase, client_name(cid), SERVER, "coded_distance", res.size, res.size * ELEMENT_BYTES)
        t0 = time.perf_counter()
        sizes = np.bincount(groups[groups >= 0], minlength=num_groups)[:num_groups]
        D = server_decode_distances(results, sizes, self.cfg)
        self.server_times.append(time.perf_counter() - t0)
        self.client_times.append(times)
        return D

    def close(self):
        if self.pool is not None:
            self.pool.shutdown()


def secfc_run(clients, cfg: ProtocolConfig, init: ClusterAssignment | None = None, rng=None,
              transcript: TranscriptLog | None = None):
    """Lloyd iterations driven entirely by decoded coded distances.

    Without ``init`` the server seeds a partition through distance queries
    (see :func:`secfc.clustering.seed_assignment`) using ``rng``.
    Returns the final partition and a :class:`RunReport` whose trajectory
    lists the labels produced by every iteration.
    """
    if transcript is None:
        transcript = TranscriptLog()
    if any(c.shares is None for c in clients):
        raise ProtocolError("run the sharing phase first")
    kernels.set_threads(cfg.workers)
    rnd = _Round(clients, cfg, transcript)
    m, k = rnd.m, cfg.k
    server = ServerState()
    try:
        if init is None:
            if rng is None:
                rng = np.random.default_rng(cfg.rng_seed)
            init = seed_assignment(rnd, m, k, rng)
        if len(init) != m or init.k != k:
            raise ProtocolError("initial assignment does not match (m, k)")
        n_init = len(rnd.server_times)
        rnd.phase = "lloyd"
        s = ClusterAssignment(init.labels, k)
        iterations, trajectory = [], []
        converged = False
        for _ in range(cfg.max_iters):
            D = rnd(s.labels, k)
            server.update(s, D)
            new = ClusterAssignment(nearest(D), k)
            iterations.append({
                "loss": float(D[np.arange(m), s.labels].sum()),
                "changes": int(np.count_nonzero(new.labels != s.labels)),
            })
            trajectory.append(new.labels)
            converged = new == s
            s = new
            if converged:
                break
    finally:
        rnd.close()

    lloyd_clients = np.array(rnd.client_times[n_init:])
    timings = {
        "client_per_iteration": float(lloyd_clients.mean()) if lloyd_clients.size else 0.0,
        "client_iterations": lloyd_clients.mean(axis=1).tolist() if lloyd_clients.size else [],
        "server_iterations": list(rnd.server_times[n_init:]),
        "server_per_iteration": float(np.mean(rnd.server_times[n_init:])) if len(rnd.server_times) > n_init else 0.0,
        "client_total": {client_name(c.client_id): float(np.sum([r[i] for r in rnd.client_times])) + c.timings.get("share", 0.0)
                         for i, c in enumerate(clients)},
        "client_share": {client_name(c.client_id): c.timings.get("share", 0.0) for c in clients},
        "server_total": float(np.sum(rnd.server_times)),
    }
    report = RunReport(
        algorithm="secfc",
        config=cfg.to_dict(),
        iterations=iterations,
        n_iterations=len(iterations),
        converged=converged,
        init_queries=n_init,
        timings=timings,
        transcript=transcript.summary(),
        seed=cfg.rng_seed,
        trajectory=trajectory,
        labels=s.labels,
    )
    return s, report
