"""Time the compiled and pure-numpy simulator kernels on the same inputs.

    python3 benchmarks/bench_kernels.py --replicas 2048 --k 3 --lam 0.5 --horizon 100

Both paths run on identical arrays; the script checks that their outputs
are bit-identical and prints the best-of-``--repeat`` wall time for each.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from ringdev import _kernels


def make_block(rng, R, k, lam, horizon):
    counts = rng.poisson(k * lam * horizon, R).astype(np.int64)
    n = int(counts.sum())
    rep = np.repeat(np.arange(R), counts)
    t = rng.random(n) * horizon
    fl = rng.integers(0, k, n).astype(np.int64)
    sz = rng.exponential(1.0, n)
    return rep, t, fl, sz, counts


def best_time(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_pack(args, block, pack):
    rep, t, fl, sz, counts = block
    R, E = counts.size, int(counts.max())

    def run():
        T_ = np.full((R, E), args.horizon)
        F_ = np.zeros((R, E), dtype=np.int64)
        L_ = np.zeros((R, E))
        pack(rep, t, fl, sz, counts, T_, F_, L_)
        return T_, F_, L_
    return best_time(run, args.repeat)


def bench_route(args, packed, counts, route):
    T_, F_, L_ = packed
    R = counts.size

    def run():
        w = np.zeros((R, args.k))
        srv = np.zeros(T_.shape, dtype=np.int64)
        wmin = np.zeros(T_.shape)
        route(args.k, T_, F_, L_, counts, np.full(R, args.horizon), w, srv, wmin)
        return w, srv, wmin
    return best_time(run, args.repeat)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--replicas", type=int, default=2048)
    ap.add_argument("--k", type=int, default=3)
    ap.add_argument("--lam", type=float, default=0.5)
    ap.add_argument("--horizon", type=float, default=100.0)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    if not _kernels.USE_NUMBA:
        print("numba path disabled (RINGDEV_DISABLE_NUMBA set); nothing to compare")
        return 1
    rng = np.random.default_rng(args.seed)
    block = make_block(rng, args.replicas, args.k, args.lam, args.horizon)
    counts = block[4]
    print(f"{args.replicas} replicas, {int(counts.sum())} arrivals, k={args.k}")

    # warm the JIT so compile time is not timed
    small = make_block(np.random.default_rng(1), 4, args.k, args.lam, 5.0)
    bench_pack(argparse.Namespace(**{**vars(args), "repeat": 1, "horizon": 5.0}), small, _kernels.pack_block)

    rows = []
    tn, packed_n = bench_pack(args, block, _kernels.pack_block)
    tp, packed_p = bench_pack(args, block, _kernels.pack_block_numpy)
    same = all(np.array_equal(x, y) for x, y in zip(packed_n, packed_p))
    rows.append(("pack_block", tn, tp, same))

    _, _ = bench_route(argparse.Namespace(**{**vars(args), "repeat": 1}), packed_n, counts, _kernels.route_block)
    tn, out_n = bench_route(args, packed_n, counts, _kernels.route_block)
    tp, out_p = bench_route(args, packed_n, counts, _kernels.route_block_numpy)
    same = all(np.array_equal(x, y) for x, y in zip(out_n, out_p))
    rows.append(("route_block", tn, tp, same))

    print(f"{'kernel':<12} {'numba s':>10} {'numpy s':>10} {'speedup':>8}  identical")
    for name, a, b, same in rows:
        print(f"{name:<12} {a:>10.4f} {b:>10.4f} {b / a:>8.1f}  {same}")
    return 0 if all(r[3] for r in rows) else 2


if __name__ == "__main__":
    raise SystemExit(main())
