"""Prime-field arithmetic and univariate polynomial interpolation.

Scalars are plain Python ints (arbitrary precision, so this module doubles as
the reference implementation the uint64 kernels are checked against).
Vector-valued polynomials keep one coefficient stream per dimension: a
:class:`Polynomial` of degree D over ``w`` dimensions stores a
``(D + 1, w)`` coefficient table, lowest degree first.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError
from .kernels import M61, MAX_MODULUS

DEFAULT_MODULUS = M61

# deterministic for every n < 3.3e24
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin for 64-bit sized integers."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class PrimeField:
    """The field F_q.  Plays the role of the field configuration object."""

    q: int = DEFAULT_MODULUS

    def __post_init__(self):
        q = int(self.q)
        object.__setattr__(self, "q", q)
        if q >= MAX_MODULUS:
            raise ConfigError(f"modulus {q} does not fit the 62-bit arithmetic path")
        if not is_prime(q):
            raise ConfigError(f"modulus {q} is not prime")

    def __call__(self, value: int) -> "FieldElement":
        return FieldElement(int(value) % self.q, self)

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.q

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.q

    def mul(self, a: int, b: int) -> int:
        return a * b % self.q

    def neg(self, a: int) -> int:
        return -a % self.q

    def inv(self, a: int) -> int:
        a %= self.q
        if a == 0:
            raise ZeroDivisionError("zero has no inverse in F_q")
        return pow(a, self.q - 2, self.q)

    def pow(self, a: int, e: int) -> int:
        if e < 0:
            return pow(self.inv(a), -e, self.q)
        return pow(a % self.q, e, self.q)

    def array(self, values) -> np.ndarray:
        """Canonical uint64 array from (possibly negative) integers."""
        arr = np.asarray(values)
        if arr.dtype.kind == "u":
            return arr.astype(np.uint64) % np.uint64(self.q)
        if arr.dtype.kind == "i":
            return (arr.astype(np.int64) % np.int64(self.q)).astype(np.uint64)
        flat = [int(v) % self.q for v in arr.ravel()]
        return np.array(flat, dtype=np.uint64).reshape(arr.shape)

    def random(self, rng: np.random.Generator, shape) -> np.ndarray:
        return rng.integers(0, self.q, size=shape, dtype=np.uint64)


FieldConfig = PrimeField


@dataclass(frozen=True)
class FieldElement:
    value: int
    field: PrimeField = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "value", int(self.value) % self.field.q)

    def _other(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.field.q != self.field.q:
                raise ValueError("elements from different fields")
            return other.value
        return int(other) % self.field.q

    def __add__(self, other):
        return FieldElement(self.value + self._other(other), self.field)

    __radd__ = __add__

    def __sub__(self, other):
        return FieldElement(self.value - self._other(other), self.field)

    def __rsub__(self, other):
        return FieldElement(self._other(other) - self.value, self.field)

    def __mul__(self, other):
        return FieldElement(self.value * self._other(other), self.field)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement(-self.value, self.field)

    def inverse(self) -> "FieldElement":
        return FieldElement(self.field.inv(self.value), self.field)

    def __truediv__(self, other):
        return self * FieldElement(self.field.inv(self._other(other)), self.field)

    def __pow__(self, e: int):
        return FieldElement(self.field.pow(self.value, e), self.field)

    def __eq__(self, other):
        if isinstance(other, FieldElement):
            return self.value == other.value and self.field.q == other.field.q
        if isinstance(other, int):
            return self.value == other % self.field.q
        return NotImplemented

    def __hash__(self):
        return hash((self.value, self.field.q))

    def __int__(self):
        return self.value


def _as_int(x) -> int:
    return x.value if isinstance(x, FieldElement) else int(x)


def _as_vector(y) -> list[int]:
    if isinstance(y, FieldElement):
        return [y.value]
    arr = np.atleast_1d(np.asarray(y, dtype=object))
    return [_as_int(v) for v in arr.ravel()]


@dataclass(frozen=True)
class Polynomial:
    """Vector-coefficient polynomial over F_q, lowest degree first."""

    coeffs: tuple[tuple[int, ...], ...]
    field: PrimeField

    @property
    def degree(self) -> int:
        for deg in range(len(self.coeffs) - 1, 0, -1):
            if any(self.coeffs[deg]):
                return deg
        return 0

    @property
    def width(self) -> int:
        return len(self.coeffs[0])

    def __call__(self, x) -> np.ndarray:
        return poly_eval(self, x)


def _linear_factors_product(xs: Sequence[int], q: int) -> list[int]:
    """Coefficients of prod (X - x) for x in xs, lowest degree first."""
    poly = [1]
    for x in xs:
        nxt = [0] * (len(poly) + 1)
        for i, c in enumerate(poly):
            nxt[i + 1] = (nxt[i + 1] + c) % q
            nxt[i] = (nxt[i] - c * x) % q
        poly = nxt
    return poly


def _divide_linear(poly: Sequence[int], root: int, q: int) -> list[int]:
    """Synthetic division of ``poly`` by (X - root); the remainder is dropped."""
    deg = len(poly) - 1
    out = [0] * deg
    carry = 0
    for i in range(deg, 0, -1):
        carry = (poly[i] + carry * root) % q
        out[i - 1] = carry
    return out


def _check_nodes(xs: Sequence[int]) -> None:
    if len(set(xs)) != len(xs):
        raise ValueError("interpolation nodes must be pairwise distinct")


def lagrange_interpolate(points: Iterable, field: PrimeField) -> Polynomial:
    """Unique polynomial of degree < len(points) through ``(x, y)`` pairs.

    ``y`` may be a scalar or a vector; every y must have the same length.
    """
    q = field.q
    pts = list(points)
    if not pts:
        raise ValueError("need at least one point")
    xs = [_as_int(x) % q for x, _ in pts]
    _check_nodes(xs)
    ys = [_as_vector(y) for _, y in pts]
    width = len(ys[0])
    if any(len(y) != width for y in ys):
        raise ValueError("all y-vectors must share one length")

    master = _linear_factors_product(xs, q)
    acc = [[0] * width for _ in range(len(xs))]
    for xj, yj in zip(xs, ys):
        num = _divide_linear(master, xj, q)
        den = 0
        for c in reversed(num):
            den = (den * xj + c) % q
        scale = field.inv(den)
        for deg, c in enumerate(num):
            cs = c * scale % q
            if cs:
                row = acc[deg]
                for e in range(width):
                    row[e] = (row[e] + cs * yj[e]) % q
    return Polynomial(tuple(tuple(r) for r in acc), field)


def poly_eval(p: Polynomial, x) -> np.ndarray:
    """Horner evaluation of every coefficient stream at ``x``."""
    q = p.field.q
    x = _as_int(x) % q
    out = [0] * p.width
    for row in reversed(p.coeffs):
        out = [(o * x + c) % q for o, c in zip(out, row)]
    return np.array(out, dtype=np.uint64)


def lagrange_basis_matrix(nodes: Sequence[int], targets: Sequence[int], field: PrimeField) -> np.ndarray:
    """Matrix ``L[r, u]`` = u-th Lagrange basis polynomial over ``nodes`` at ``targets[r]``.

    Multiplying it against values at the nodes evaluates the interpolant at
    every target, which is how bulk encoding and decoding avoid building
    coefficient tables.
    """
    q = field.q
    nodes = [int(v) % q for v in nodes]
    _check_nodes(nodes)
    denoms = []
    for u, bu in enumerate(nodes):
        d = 1
        for v, bv in enumerate(nodes):
            if v != u:
                d = d * (bu - bv) % q
        denoms.append(field.inv(d))
    out = np.zeros((len(targets), len(nodes)), dtype=np.uint64)
    for r, a in enumerate(targets):
        a = int(a) % q
        for u, bu in enumerate(nodes):
            num = denoms[u]
            for v, bv in enumerate(nodes):
                if v != u:
                    num = num * (a - bv) % q
            out[r, u] = num
    return out


@dataclass(frozen=True)
class EvalPoints:
    """Public evaluation points: betas carry data/noise, alphas index clients."""

    betas: tuple[int, ...]
    alphas: tuple[int, ...]
    q: int

    def __post_init__(self):
        betas = tuple(int(b) % self.q for b in self.betas)
        alphas = tuple(int(a) % self.q for a in self.alphas)
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "alphas", alphas)
        allpts = betas + alphas
        if len(set(allpts)) != len(allpts):
            raise ConfigError("evaluation points must be pairwise distinct and betas disjoint from alphas")

    @classmethod
    def default(cls, ell: int, t: int, n: int, field: PrimeField) -> "EvalPoints":
        """beta_u = u for u in 1..ell+t, alpha_j = ell + t + j for j in 1..n."""
        r = ell + t
        if r + n >= field.q:
            raise ConfigError(f"field F_{field.q} has too few elements for {r + n} evaluation points")
        return cls(tuple(range(1, r + 1)), tuple(range(r + 1, r + n + 1)), field.q)

    @cached_property
    def as_dict(self) -> dict:
        return {"betas": list(self.betas), "alphas": list(self.alphas)}
