"""Compare the numba kernels against the pure-numpy fallback.

    python benchmarks/bench_backends.py [--m 2000] [--d 100] [--repeats 5]

Prints the best-of-N wall time per kernel and backend, the speedup, and
checks that both backends return identical arrays.
"""

import argparse
import time

import numpy as np

from secfc import kernels
from secfc.codec import SharingParams, draw_noise, encode_points
from secfc.field import PrimeField


def best_of(fn, repeats):
    fn()  # compile / warm caches
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--m", type=int, default=2000)
    ap.add_argument("--d", type=int, default=100)
    ap.add_argument("--k", type=int, default=4)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    field = PrimeField()
    q = field.q
    rng = np.random.default_rng(0)
    sp = SharingParams(1, 4, 10, field)
    X = field.random(rng, (args.m, args.d))
    Z = draw_noise(rng, args.m, sp, args.d)
    shares = encode_points(X, sp, Z)[0]
    labels = rng.integers(0, args.k, args.m)
    sums, sizes = kernels.group_sums(shares, labels, args.k, q)
    coded = rng.integers(0, q, (9, args.m * args.k), dtype=np.uint64)
    w = rng.integers(0, q, (1, 9), dtype=np.uint64)

    cases = {
        "mul_mod": lambda: kernels.mul_mod(X, X, q),
        "encode (matmul)": lambda: encode_points(X, sp, Z),
        "group_sums": lambda: kernels.group_sums(shares, labels, args.k, q)[0],
        "coded_distances": lambda: kernels.coded_distances(shares, sums, sizes, q),
        "decode (matmul)": lambda: kernels.matmul_mod(w, coded, q),
    }

    print(f"m={args.m} d={args.d} k={args.k} q=2^61-1, best of {args.repeats}")
    print(f"{'kernel':<18} {'numba':>11} {'numpy':>11} {'speedup':>8}  same")
    prev = kernels.get_backend()
    try:
        for name, fn in cases.items():
            kernels.set_backend("numba")
            t_nb, out_nb = best_of(fn, args.repeats)
            kernels.set_backend("numpy")
            t_np, out_np = best_of(fn, args.repeats)
            same = np.array_equal(out_nb, out_np)
            print(f"{name:<18} {t_nb * 1e3:>9.2f}ms {t_np * 1e3:>9.2f}ms {t_np / t_nb:>7.1f}x  {same}")
    finally:
        kernels.set_backend(prev)


if __name__ == "__main__":
    main()
