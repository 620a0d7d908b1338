"""Hot loops of the simulator, compiled with numba when available.

Set ``RINGDEV_DISABLE_NUMBA=1`` before import to force the pure-numpy
paths.  Both paths perform the same floating-point operations in the same
order and therefore return bit-identical results.
"""
from __future__ import annotations

import os

import numpy as np

_FLAG = os.environ.get("RINGDEV_DISABLE_NUMBA", "").strip().lower()
USE_NUMBA = _FLAG not in ("1", "true", "yes", "on")

if USE_NUMBA:
    try:
        import numba
    except ImportError:  # pragma: no cover - numba is a declared dependency
        USE_NUMBA = False


def _njit(fn):
    if USE_NUMBA:
        return numba.njit(cache=True, nogil=True)(fn)
    return fn


def route_block_numba(k, times, flows, lengths, counts, t_end, w_out, server_out, wmin_out):
    """Replay padded arrival streams through the ring, one replica per row.

    Workloads start at zero at time 0, drain at unit rate, and each arrival
    of flow ``i`` joins server ``i - 1`` unless server ``i`` holds strictly
    less work.  ``w_out`` receives the workloads at ``t_end``.
    """
    R = times.shape[0]
    for r in range(R):
        t = 0.0
        for s in range(k):
            w_out[r, s] = 0.0
        for e in range(counts[r]):
            te = times[r, e]
            dt = te - t
            for s in range(k):
                v = w_out[r, s] - dt
                w_out[r, s] = v if v > 0.0 else 0.0
            t = te
            i = flows[r, e]
            left = i - 1 if i > 0 else k - 1
            wl = w_out[r, left]
            wr = w_out[r, i]
            if wl <= wr:
                srv = left
                wmin_out[r, e] = wl
            else:
                srv = i
                wmin_out[r, e] = wr
            w_out[r, srv] += lengths[r, e]
            server_out[r, e] = srv
        dt = t_end[r] - t
        for s in range(k):
            v = w_out[r, s] - dt
            w_out[r, s] = v if v > 0.0 else 0.0


def route_block_numpy(k, times, flows, lengths, counts, t_end, w_out, server_out, wmin_out):
    """Same recursion as the compiled kernel, stepped in lockstep across replicas."""
    R, E = times.shape
    w_out[:] = 0.0
    t = np.zeros(R)
    max_e = int(counts.max()) if R else 0
    for e in range(max_e):
        rows = np.nonzero(counts > e)[0]
        te = times[rows, e]
        dt = te - t[rows]
        v = w_out[rows] - dt[:, None]
        w = np.where(v > 0.0, v, 0.0)
        t[rows] = te
        i = flows[rows, e]
        left = np.where(i > 0, i - 1, k - 1)
        wl = w[np.arange(rows.size), left]
        wr = w[np.arange(rows.size), i]
        go_left = wl <= wr
        srv = np.where(go_left, left, i)
        wmin_out[rows, e] = np.where(go_left, wl, wr)
        w[np.arange(rows.size), srv] += lengths[rows, e]
        server_out[rows, e] = srv
        w_out[rows] = w
    dt = t_end - t
    v = w_out - dt[:, None]
    w_out[:] = np.where(v > 0.0, v, 0.0)


def pack_block_numba(rep, t, fl, sz, counts, times_out, flows_out, lengths_out):
    """Scatter unsorted arrivals into padded per-replica rows sorted by time.

    Rows are filled in input order and then stably sorted, so equal times
    keep their input (flow-major) order.
    """
    R = counts.shape[0]
    cursor = np.zeros(R, dtype=np.int64)
    for j in range(rep.shape[0]):
        r = rep[j]
        c = cursor[r]
        times_out[r, c] = t[j]
        flows_out[r, c] = fl[j]
        lengths_out[r, c] = sz[j]
        cursor[r] = c + 1
    for r in range(R):
        m = counts[r]
        if m < 2:
            continue
        order = np.argsort(times_out[r, :m], kind="mergesort")
        tt = times_out[r, :m][order]
        ff = flows_out[r, :m][order]
        ll = lengths_out[r, :m][order]
        times_out[r, :m] = tt
        flows_out[r, :m] = ff
        lengths_out[r, :m] = ll


def pack_block_numpy(rep, t, fl, sz, counts, times_out, flows_out, lengths_out):
    # input order is flow-major, so ties in time fall back to flow index as in the loop version
    order = np.lexsort((np.arange(rep.size), t, rep))
    rep, t, fl, sz = rep[order], t[order], fl[order], sz[order]
    starts = np.concatenate((np.zeros(1, dtype=np.int64), np.cumsum(counts)[:-1]))
    col = np.arange(rep.size) - starts[rep]
    times_out[rep, col] = t
    flows_out[rep, col] = fl
    lengths_out[rep, col] = sz


def sup_deviation_numba(times, sizes, n, T, a):
    """``max_{0<=s<=T} |path(s) - a s|`` for the scaled step path of one flow.

    ``times`` are jump epochs already scaled to ``[0, T]``; the path jumps by
    ``sizes / n``.  Between jumps the gap is affine in ``s``, so checking both
    one-sided limits at every jump plus the right end is exact.
    """
    f = 0.0
    y = 0.0
    for j in range(times.shape[0]):
        s = times[j]
        d = abs(y - a * s)
        if d > f:
            f = d
        y += sizes[j] / n
        d = abs(y - a * s)
        if d > f:
            f = d
    d = abs(y - a * T)
    if d > f:
        f = d
    return f


def sup_deviation_numpy(times, sizes, n, T, a):
    y_after = np.cumsum(sizes / n)
    y_before = np.concatenate((np.zeros(1), y_after[:-1]))
    y_end = y_after[-1] if times.size else 0.0
    f = abs(y_end - a * T)
    if times.size:
        f = max(f, float(np.max(np.abs(y_before - a * times))),
                float(np.max(np.abs(y_after - a * times))))
    return f


def best_slope_impl(times, sizes, n, T):
    """Slope minimizing the sup deviation; the objective is convex in ``a`` so a ternary search is exact."""
    total = 0.0
    for j in range(times.shape[0]):
        total += sizes[j]
    lo = 0.0
    hi = 2.0 * (total / n) / T + 1.0
    for _ in range(200):
        a1 = lo + (hi - lo) / 3.0
        a2 = hi - (hi - lo) / 3.0
        if sup_deviation(times, sizes, n, T, a1) <= sup_deviation(times, sizes, n, T, a2):
            hi = a2
        else:
            lo = a1
    return 0.5 * (lo + hi)


if USE_NUMBA:
    route_block = _njit(route_block_numba)
    pack_block = _njit(pack_block_numba)
    sup_deviation = _njit(sup_deviation_numba)
else:
    route_block = route_block_numpy
    pack_block = pack_block_numpy
    sup_deviation = sup_deviation_numpy
best_slope = _njit(best_slope_impl)

BACKEND = "numba" if USE_NUMBA else "numpy"
