"""Numba-compiled twins of the kernels in ``_numpy``.

Same signatures and bit-identical results; constants are typed ``uint64``
so numba never promotes mixed signed/unsigned arithmetic to float.
"""

import os

import numba
import numpy as np
from numba import njit, prange

from ._common import M61, modulus_mode

if "NUMBA_THREADING_LAYER" not in os.environ:
    numba.config.THREADING_LAYER = "workqueue"

_U = np.uint64
_ZERO = _U(0)
_ONE = _U(1)
_MASK32 = _U(0xFFFFFFFF)
_MASK29 = _U((1 << 29) - 1)
_P61 = _U(M61)
_S3 = _U(3)
_S29 = _U(29)
_S32 = _U(32)
_S61 = _U(61)


@njit(cache=True)
def _addmod(a, b, q):
    s = a + b
    if s >= q:
        s -= q
    return s


@njit(cache=True)
def _submod(a, b, q):
    if a >= b:
        return a - b
    return a + (q - b)


@njit(cache=True)
def _mulmod(a, b, q, mode):
    if mode == 0:
        a0 = a & _MASK32
        a1 = a >> _S32
        b0 = b & _MASK32
        b1 = b >> _S32
        lo = a0 * b0
        mid = a0 * b1 + a1 * b0
        hi = a1 * b1
        r = (lo & _P61) + (lo >> _S61) + (hi << _S3) + (mid >> _S29) + ((mid & _MASK29) << _S32)
        r = (r & _P61) + (r >> _S61)
        if r >= _P61:
            r -= _P61
        return r
    if mode == 1:
        return (a * b) % q
    acc = _ZERO
    while b:
        if b & _ONE:
            acc = _addmod(acc, a, q)
        a = _addmod(a, a, q)
        b >>= _ONE
    return acc


@njit(cache=True)
def _mul_flat(a, b, q, mode):
    out = np.empty_like(a)
    for i in range(a.size):
        out[i] = _mulmod(a[i], b[i], q, mode)
    return out


@njit(cache=True)
def _add_flat(a, b, q):
    out = np.empty_like(a)
    for i in range(a.size):
        out[i] = _addmod(a[i], b[i], q)
    return out


@njit(cache=True)
def _sub_flat(a, b, q):
    out = np.empty_like(a)
    for i in range(a.size):
        out[i] = _submod(a[i], b[i], q)
    return out


@njit(cache=True)
def _rowsum(a, q):
    n, L = a.shape
    out = np.zeros(n, dtype=np.uint64)
    for r in range(n):
        acc = _ZERO
        for c in range(L):
            acc = _addmod(acc, a[r, c], q)
        out[r] = acc
    return out


_BLOCK = 2048
# below this many multiply-adds a thread launch costs more than it saves
_PAR_MIN = 1 << 18


@njit(cache=True)
def _matmul_block(A, B, q, mode, out, lo, hi):
    R, S = A.shape
    # a fresh buffer cannot alias B, which lets the inner loop vectorize
    buf = np.zeros(hi - lo, dtype=np.uint64)
    for r in range(R):
        buf[:] = _ZERO
        for s in range(S):
            a = A[r, s]
            for c in range(hi - lo):
                buf[c] = _addmod(buf[c], _mulmod(a, B[s, lo + c], q, mode), q)
        out[r, lo:hi] = buf


@njit(cache=True)
def _matmul_serial(A, B, q, mode):
    N = B.shape[1]
    out = np.zeros((A.shape[0], N), dtype=np.uint64)
    for lo in range(0, N, _BLOCK):
        _matmul_block(A, B, q, mode, out, lo, min(N, lo + _BLOCK))
    return out


@njit(parallel=True, cache=True)
def _matmul(A, B, q, mode):
    R = A.shape[0]
    N = B.shape[1]
    out = np.zeros((R, N), dtype=np.uint64)
    # column blocks keep the innermost loop contiguous in B and out
    nblk = (N + _BLOCK - 1) // _BLOCK
    for b in prange(nblk):
        _matmul_block(A, B, q, mode, out, b * _BLOCK, min(N, (b + 1) * _BLOCK))
    return out


@njit(cache=True)
def _group_sums(shares, groups, num_groups, q):
    m, w = shares.shape
    sums = np.zeros((num_groups, w), dtype=np.uint64)
    sizes = np.zeros(num_groups, dtype=np.int64)
    for i in range(m):
        h = groups[i]
        if h < 0:
            continue
        sizes[h] += 1
        for e in range(w):
            sums[h, e] = _addmod(sums[h, e], shares[i, e], q)
    return sums, sizes


@njit(parallel=True, cache=True)
def _coded(shares, sums, scale, q, mode):
    m, w = shares.shape
    g = sums.shape[0]
    out = np.empty((m, g), dtype=np.uint64)
    for i in prange(m):
        for h in range(g):
            acc = _ZERO
            for e in range(w):
                diff = _submod(sums[h, e], _mulmod(scale[h], shares[i, e], q, mode), q)
                acc = _addmod(acc, _mulmod(diff, diff, q, mode), q)
            out[i, h] = acc
    return out


def _pair(a, b):
    a, b = np.broadcast_arrays(np.asarray(a, dtype=np.uint64), np.asarray(b, dtype=np.uint64))
    return np.ascontiguousarray(a).ravel(), np.ascontiguousarray(b).ravel(), a.shape


def mul_mod(a, b, q):
    fa, fb, shape = _pair(a, b)
    return _mul_flat(fa, fb, _U(q), modulus_mode(q)).reshape(shape)


def add_mod(a, b, q):
    fa, fb, shape = _pair(a, b)
    return _add_flat(fa, fb, _U(q)).reshape(shape)


def sub_mod(a, b, q):
    fa, fb, shape = _pair(a, b)
    return _sub_flat(fa, fb, _U(q)).reshape(shape)


def sum_mod(a, axis, q):
    a = np.moveaxis(np.asarray(a, dtype=np.uint64), axis, -1)
    lead = a.shape[:-1]
    flat = np.ascontiguousarray(a).reshape(-1, a.shape[-1])
    return _rowsum(flat, _U(q)).reshape(lead)


def matmul_mod(A, B, q):
    A = np.ascontiguousarray(A, dtype=np.uint64)
    B = np.ascontiguousarray(B, dtype=np.uint64)
    kern = _matmul if numba.get_num_threads() > 1 and A.size * B.shape[1] >= _PAR_MIN else _matmul_serial
    return kern(A, B, _U(q), modulus_mode(q))


def group_sums(shares, groups, num_groups, q):
    return _group_sums(
        np.ascontiguousarray(shares, dtype=np.uint64),
        np.ascontiguousarray(groups, dtype=np.int64),
        int(num_groups),
        _U(q),
    )


def coded_distances(shares, sums, sizes, q):
    scale = (np.asarray(sizes, dtype=np.int64) % q).astype(np.uint64)
    return _coded(
        np.ascontiguousarray(shares, dtype=np.uint64),
        np.ascontiguousarray(sums, dtype=np.uint64),
        scale,
        _U(q),
        modulus_mode(q),
    )


def set_threads(n):
    numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
