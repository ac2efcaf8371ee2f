"""Modular-arithmetic kernels with a switchable backend.

The numba backend is used when numba imports cleanly; set
``SECFC_BACKEND=numpy`` to force the pure-numpy path (``SECFC_BACKEND=numba``
makes a missing numba an error instead of a silent fallback).  The backend
can also be swapped at runtime with :func:`set_backend`, which is how the
benchmark compares the two.
"""

import importlib
import os

from ._common import M61, MAX_MODULUS, modulus_mode

ENV_VAR = "SECFC_BACKEND"
BACKENDS = ("numba", "numpy")

_active = None


def _load(name):
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}; choose from {BACKENDS}")
    return importlib.import_module(f"{__name__}._{name}")


def _initial():
    wanted = os.environ.get(ENV_VAR, "auto").strip().lower() or "auto"
    if wanted == "auto":
        try:
            return "numba", _load("numba")
        except ImportError:
            return "numpy", _load("numpy")
    return wanted, _load(wanted)


def _impl():
    global _active
    if _active is None:
        _active = _initial()
    return _active[1]


def get_backend():
    _impl()
    return _active[0]


def set_backend(name):
    """Switch backend; returns the previously active name."""
    global _active
    prev = get_backend()
    _active = (name, _load(name))
    return prev


def set_threads(n):
    """Thread count for the parallel numba loops (no-op under numpy)."""
    impl = _impl()
    if hasattr(impl, "set_threads"):
        impl.set_threads(n)


def mul_mod(a, b, q):
    return _impl().mul_mod(a, b, q)


def add_mod(a, b, q):
    return _impl().add_mod(a, b, q)


def sub_mod(a, b, q):
    return _impl().sub_mod(a, b, q)


def sum_mod(a, axis, q):
    return _impl().sum_mod(a, axis, q)


def matmul_mod(A, B, q):
    return _impl().matmul_mod(A, B, q)


def group_sums(shares, groups, num_groups, q):
    return _impl().group_sums(shares, groups, num_groups, q)


def coded_distances(shares, sums, sizes, q):
    return _impl().coded_distances(shares, sums, sizes, q)


__all__ = [
    "ENV_VAR",
    "M61",
    "MAX_MODULUS",
    "add_mod",
    "coded_distances",
    "get_backend",
    "group_sums",
    "matmul_mod",
    "modulus_mode",
    "mul_mod",
    "set_backend",
    "set_threads",
    "sub_mod",
    "sum_mod",
]
