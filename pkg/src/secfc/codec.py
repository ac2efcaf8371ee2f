"""Fixed-point quantization and Lagrange secret sharing of data points.

A point ``x`` in F_q^d is cut into ``ell`` contiguous segments of width
``d / ell``.  The segments sit at ``beta_1..beta_ell``, ``t`` uniform noise
vectors at ``beta_{ell+1}..beta_{ell+t}``, and client ``j`` receives the
interpolant evaluated at ``alpha_j``.  Any ``t`` shares are uniformly
distributed whatever the data; any ``ell + t`` shares determine the point.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from . import kernels
from .clustering import scaled_distances
from .errors import ConfigError, DecodeError, HeadroomError, QuantizationError
from .field import EvalPoints, PrimeField, lagrange_basis_matrix, lagrange_interpolate, poly_eval


@dataclass(frozen=True)
class QuantizerConfig:
    """Scaling ``lam`` sets the precision (1/lam); ``eta`` optionally caps |lam*x|."""

    lam: float
    q: int
    eta: float | None = None

    def __post_init__(self):
        if not self.lam > 0:
            raise ConfigError(f"scaling factor must be positive, got {self.lam}")
        if self.eta is not None and not 0 < self.eta <= self.q / 2:
            raise ConfigError("eta must lie in (0, q/2]")

    @property
    def bound(self) -> float:
        return self.q / 2 if self.eta is None else self.eta


def quantize(x, cfg: QuantizerConfig) -> np.ndarray:
    """Element-wise floor(lam*x) for x >= 0 and floor(q + lam*x) for x < 0."""
    x = np.asarray(x, dtype=np.float64)
    scaled = cfg.lam * x
    if not np.all(np.isfinite(scaled)):
        raise QuantizationError("non-finite value cannot be quantized")
    bad = np.abs(scaled) >= cfg.bound
    if np.any(bad):
        worst = float(np.max(np.abs(scaled)))
        raise QuantizationError(f"|lam*x| = {worst:.6g} overflows the bound {cfg.bound:.6g}")
    # floor(q + s) == q + floor(s) because q is an integer
    ints = np.floor(scaled).astype(np.int64)
    return np.where(x < 0, ints + np.int64(cfg.q), ints).astype(np.uint64)


def to_signed(v, q: int) -> np.ndarray:
    """Map residues in the upper half of F_q back to negative integers."""
    v = np.asarray(v, dtype=np.uint64)
    half = np.uint64(q // 2)
    return np.where(v > half, -(np.uint64(q) - v).astype(np.int64), v.astype(np.int64))


def dequantize(v, cfg: QuantizerConfig) -> np.ndarray:
    return to_signed(v, cfg.q) / cfg.lam


def dequantize_distance(v: int, cfg: QuantizerConfig, cluster_size: int) -> float:
    """Real squared distance from a decoded scaled value ``|S|^2 * lam^2 * d``."""
    if cluster_size <= 0:
        raise ValueError("cluster is empty; its distance is undefined")
    return float(scaled_distances(np.array([[int(v)]], dtype=np.uint64), np.array([cluster_size]), cfg.lam**2)[0, 0])


def dequantize_distances(values, sizes, cfg: QuantizerConfig) -> np.ndarray:
    """Vectorized :func:`dequantize_distance`; empty clusters map to +inf."""
    return scaled_distances(values, sizes, cfg.lam**2)


def headroom_bound(lam: float, max_abs: float, d: int, m: int) -> int:
    """Upper bound on any scaled coded distance ``||sum_S x - |S| x_i||^2``.

    Uses ``|S| <= m`` and ``|floor(lam*x)| <= lam*max_abs + 1`` per element.
    """
    a = int(np.floor(lam * max_abs)) + 1
    return 4 * m * m * a * a * d


def validate_headroom(cfg: QuantizerConfig, max_abs: float, d: int, m: int) -> None:
    D = headroom_bound(cfg.lam, max_abs, d, m)
    if cfg.q < 2 * D:
        raise HeadroomError(
            f"q = {cfg.q} < 2*D = {2 * D} (lam={cfg.lam}, max|x|={max_abs:.4g}, d={d}, m={m}); "
            "lower lam or enlarge q"
        )


def max_safe_lambda(q: int, max_abs: float, d: int, m: int, cap: float = 2.0**20) -> float:
    """Largest power-of-two scaling factor <= ``cap`` that passes the headroom check."""
    lam = float(cap)
    while lam >= 2.0**-20:
        if q >= 2 * headroom_bound(lam, max_abs, d, m):
            return lam
        lam /= 2
    raise HeadroomError(f"no scaling factor fits q = {q} for max|x|={max_abs}, d={d}, m={m}")


@dataclass(frozen=True)
class SharingParams:
    ell: int
    t: int
    n: int
    field: PrimeField
    eval_points: EvalPoints | None = None

    def __post_init__(self):
        if self.ell < 1 or self.t < 1:
            raise ConfigError("need ell >= 1 and t >= 1")
        if 2 * self.t + 2 * self.ell - 1 > self.n:
            raise ConfigError(
                f"privacy condition violated: 2t + 2ell - 1 = {2 * self.t + 2 * self.ell - 1} > n = {self.n}"
            )
        if self.eval_points is None:
            object.__setattr__(self, "eval_points", EvalPoints.default(self.ell, self.t, self.n, self.field))
        ep = self.eval_points
        if len(ep.betas) != self.ell + self.t or len(ep.alphas) != self.n:
            raise ConfigError("evaluation point counts do not match (ell + t, n)")
        if ep.q != self.field.q:
            raise ConfigError("evaluation points belong to a different field")

    @property
    def q(self) -> int:
        return self.field.q

    @property
    def decode_degree(self) -> int:
        return 2 * self.ell + 2 * self.t - 2

    @property
    def min_decoders(self) -> int:
        return 2 * self.ell + 2 * self.t - 1

    def width(self, d: int) -> int:
        if d % self.ell:
            raise ConfigError(f"dimension {d} is not divisible by ell = {self.ell}")
        return d // self.ell

    @cached_property
    def encode_matrix(self) -> np.ndarray:
        """``(n, ell + t)`` matrix of basis values at each client's alpha."""
        ep = self.eval_points
        return lagrange_basis_matrix(ep.betas, ep.alphas, self.field)

    def decode_weights(self, holders: Sequence[int]) -> np.ndarray:
        """Weights ``w`` with ``sum_u phi(beta_u) = sum_j w_j phi(alpha_holder_j)``.

        Valid for every ``phi`` of degree <= 2ell + 2t - 2 once
        ``len(holders) >= 2ell + 2t - 1``.
        """
        holders = list(holders)
        if len(holders) < self.min_decoders:
            raise DecodeError(f"need {self.min_decoders} client results, got {len(holders)}")
        ep = self.eval_points
        L = lagrange_basis_matrix([ep.alphas[j] for j in holders], ep.betas[: self.ell], self.field)
        return kernels.sum_mod(L, 0, self.q)

    def reconstruction_matrix(self, holders: Sequence[int]) -> np.ndarray:
        """``(ell, len(holders))`` map from shares to the data segments."""
        holders = list(holders)
        if len(holders) < self.ell + self.t:
            raise DecodeError(f"need {self.ell + self.t} shares to reconstruct, got {len(holders)}")
        ep = self.eval_points
        return lagrange_basis_matrix([ep.alphas[j] for j in holders], ep.betas[: self.ell], self.field)


@dataclass(frozen=True)
class Share:
    owner: int
    holder: int
    values: np.ndarray


def split_segments(x, ell: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.uint64)
    if x.shape[-1] % ell:
        raise ConfigError(f"dimension {x.shape[-1]} is not divisible by ell = {ell}")
    return x.reshape(*x.shape[:-1], ell, x.shape[-1] // ell)


def encoding_polynomial(x, params: SharingParams, noise):
    """Interpolant through the data segments and the noise vectors."""
    segs = split_segments(x, params.ell)
    noise = np.atleast_2d(np.asarray(noise, dtype=np.uint64))
    if noise.shape != (params.t, segs.shape[-1]):
        raise ValueError(f"expected {params.t} noise vectors of width {segs.shape[-1]}, got shape {noise.shape}")
    ys = list(segs) + list(noise)
    return lagrange_interpolate(zip(params.eval_points.betas, ys), params.field)


def encode_point(x, params: SharingParams, noise, owner: int = 0) -> list[Share]:
    """Share one point; reference path through explicit polynomials."""
    poly = encoding_polynomial(x, params, noise)
    return [Share(owner, j, poly_eval(poly, a)) for j, a in enumerate(params.eval_points.alphas)]


def draw_noise(rng: np.random.Generator, m: int, params: SharingParams, w: int) -> np.ndarray:
    return params.field.random(rng, (m, params.t, w))


def encode_points(X, params: SharingParams, noise) -> np.ndarray:
    """Bulk sharing: ``(m, d)`` points and ``(m, t, w)`` noise -> ``(n, m, w)`` shares."""
    X = np.asarray(X, dtype=np.uint64)
    m, d = X.shape
    w = params.width(d)
    noise = np.asarray(noise, dtype=np.uint64)
    if noise.shape != (m, params.t, w):
        raise ValueError(f"noise must have shape {(m, params.t, w)}, got {noise.shape}")
    stacked = np.concatenate([X.reshape(m, params.ell, w), noise], axis=1)
    B = np.ascontiguousarray(stacked.transpose(1, 0, 2)).reshape(params.ell + params.t, m * w)
    return kernels.matmul_mod(params.encode_matrix, B, params.q).reshape(params.n, m, w)


def reconstruct_points(shares, holders: Sequence[int], params: SharingParams) -> np.ndarray:
    """Recover ``(m, d)`` points from ``(c, m, w)`` shares held by ``holders``."""
    shares = np.asarray(shares, dtype=np.uint64)
    c, m, w = shares.shape
    use = params.ell + params.t
    R = params.reconstruction_matrix(list(holders)[:use])
    segs = kernels.matmul_mod(R, shares[:use].reshape(use, m * w), params.q)
    return np.ascontiguousarray(segs.reshape(params.ell, m, w).transpose(1, 0, 2)).reshape(m, params.ell * w)


def decode_scalar_poly(evals, degree: int, betas: Sequence[int], field: PrimeField) -> int:
    """Interpolate from the first ``degree + 1`` evaluations and return ``sum phi(beta)``."""
    evals = list(evals)
    if len(evals) < degree + 1:
        raise DecodeError(f"degree {degree} needs {degree + 1} evaluations, got {len(evals)}")
    poly = lagrange_interpolate(evals[: degree + 1], field)
    total = 0
    for b in betas:
        total = (total + int(poly_eval(poly, b)[0])) % field.q
    return total


def decode_batch(results, weights, q: int) -> np.ndarray:
    """Apply decode weights to ``(c, ...)`` stacked client results."""
    results = np.asarray(results, dtype=np.uint64)
    c = results.shape[0]
    flat = results.reshape(c, -1)
    return kernels.matmul_mod(np.asarray(weights, dtype=np.uint64)[None, :], flat, q).reshape(results.shape[1:])
