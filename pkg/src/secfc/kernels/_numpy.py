"""Pure-numpy modular kernels over uint64 arrays.

Every input array holds canonical residues in ``[0, q)`` with ``q < 2**62``,
so a sum of two residues never overflows 64 bits.
"""

import numpy as np

from ._common import M61, MODE_M61, MODE_SMALL, modulus_mode

_U = np.uint64
_MASK32 = _U(0xFFFFFFFF)
_MASK29 = _U((1 << 29) - 1)
_P61 = _U(M61)
_S3 = _U(3)
_S29 = _U(29)
_S32 = _U(32)
_S61 = _U(61)


def _u64(a):
    return np.asarray(a, dtype=np.uint64)


def _mul_m61(a, b):
    a0 = a & _MASK32
    a1 = a >> _S32
    b0 = b & _MASK32
    b1 = b >> _S32
    lo = a0 * b0
    mid = a0 * b1 + a1 * b0
    hi = a1 * b1
    # 2**64 == 8 and 2**61 == 1 (mod 2**61 - 1)
    r = (lo & _P61) + (lo >> _S61) + (hi << _S3) + (mid >> _S29) + ((mid & _MASK29) << _S32)
    r = (r & _P61) + (r >> _S61)
    return np.where(r >= _P61, r - _P61, r)


def _mul_generic(a, b, q):
    # shift-and-add; every partial sum stays below 2q < 2**63
    qq = _U(q)
    one = _U(1)
    a, b = np.broadcast_arrays(a, b)
    a = a.copy()
    b = b.copy()
    acc = np.zeros(a.shape, dtype=np.uint64)
    while np.any(b):
        bit = (b & one).astype(bool)
        s = acc + a
        acc = np.where(bit, np.where(s >= qq, s - qq, s), acc)
        a2 = a + a
        a = np.where(a2 >= qq, a2 - qq, a2)
        b >>= one
    return acc


def mul_mod(a, b, q):
    a = _u64(a)
    b = _u64(b)
    mode = modulus_mode(q)
    if mode == MODE_M61:
        return _mul_m61(a, b)
    if mode == MODE_SMALL:
        return (a * b) % _U(q)
    return _mul_generic(a, b, q)


def add_mod(a, b, q):
    qq = _U(q)
    s = _u64(a) + _u64(b)
    return np.where(s >= qq, s - qq, s)


def sub_mod(a, b, q):
    a = _u64(a)
    b = _u64(b)
    return np.where(a >= b, a - b, a + (_U(q) - b))


def sum_mod(a, axis, q):
    a = _u64(a)
    if a.shape[axis] >= 1 << 31:
        raise ValueError("reduction axis too long for limb summation")
    lo = (a & _MASK32).sum(axis=axis, dtype=np.uint64) % _U(q)
    hi = (a >> _S32).sum(axis=axis, dtype=np.uint64) % _U(q)
    return add_mod(mul_mod(hi, _U((1 << 32) % q), q), lo, q)


def matmul_mod(A, B, q):
    A = _u64(A)
    B = _u64(B)
    out = np.zeros((A.shape[0], B.shape[1]), dtype=np.uint64)
    for s in range(A.shape[1]):
        out = add_mod(out, mul_mod(A[:, s : s + 1], B[s][None, :], q), q)
    return out


def group_sums(shares, groups, num_groups, q):
    shares = _u64(shares)
    groups = np.asarray(groups, dtype=np.int64)
    w = shares.shape[1]
    sums = np.zeros((num_groups, w), dtype=np.uint64)
    sizes = np.zeros(num_groups, dtype=np.int64)
    for g in range(num_groups):
        sel = groups == g
        sizes[g] = int(sel.sum())
        if sizes[g]:
            sums[g] = sum_mod(shares[sel], 0, q)
    return sums, sizes


def coded_distances(shares, sums, sizes, q, chunk=2048):
    shares = _u64(shares)
    sums = _u64(sums)
    scale = (np.asarray(sizes, dtype=np.int64) % q).astype(np.uint64)
    m = shares.shape[0]
    out = np.empty((m, sums.shape[0]), dtype=np.uint64)
    for start in range(0, m, chunk):
        x = shares[start : start + chunk]
        scaled = mul_mod(scale[None, :, None], x[:, None, :], q)
        diff = sub_mod(sums[None, :, :], scaled, q)
        out[start : start + chunk] = sum_mod(mul_mod(diff, diff, q), 2, q)
    return out
