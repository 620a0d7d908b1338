"""Load slopes produced by the shortest-workload routing on linear input paths.

Flow ``i`` (0-based) is served by servers ``i`` and ``i - 1``.  It sends a
fraction ``alpha[i]`` of its slope ``a[i]`` to server ``i`` and the rest to
server ``i - 1``, so server ``i`` carries

    b[i] = alpha[i] * a[i] + (1 - alpha[i + 1]) * a[i + 1].

The routing equalizes loads as far as the split box ``[0, 1]`` allows, i.e.
the fractions minimize the total variation ``D`` of ``b`` around the ring
(problem O1) or along an arc of servers fed by a connected group of flows
(problem O2).  Both are small linear programs; they are solved exactly in
rational arithmetic by the simplex below so that ``D == 0`` is decided
without round-off.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DimensionError, DomainError, NoRootError

BALANCE_TOL = 1e-9


@dataclass(frozen=True)
class SplitFractions:
    alpha: np.ndarray


@dataclass(frozen=True)
class LoadConfiguration:
    b: np.ndarray
    D: float
    T: float | None = None


# -- exact simplex ------------------------------------------------------------

def _pivot(tab, basis, row, col):
    pr = tab[row]
    pv = pr[col]
    if pv != 1:
        tab[row] = pr = [v / pv for v in pr]
    for r, other in enumerate(tab):
        if r != row:
            f = other[col]
            if f != 0:
                tab[r] = [o - f * p for o, p in zip(other, pr)]
    basis[row] = col


def _run(tab, basis, cost, allowed):
    """Minimize ``cost . x`` over the current tableau with Bland's rule.

    ``tab`` rows are ``[coeffs..., rhs]``; the objective is priced from
    scratch each iteration, which is cheap at these sizes.
    """
    ncol = len(tab[0]) - 1
    while True:
        cb = [cost[j] for j in basis]
        entering = None
        for j in range(ncol):
            if not allowed[j] or j in basis:
                continue
            reduced = cost[j] - sum(c * row[j] for c, row in zip(cb, tab) if c != 0)
            if reduced < 0:
                entering = j
                break
        if entering is None:
            return
        best = None
        for r, row in enumerate(tab):
            if row[entering] > 0:
                ratio = row[-1] / row[entering]
                if best is None or ratio < best[0] or (ratio == best[0] and basis[r] < basis[best[1]]):
                    best = (ratio, r)
        if best is None:
            raise NoRootError("linear program is unbounded")
        _pivot(tab, basis, best[1], entering)


def simplex_min(c, A_ub, b_ub):
    """Exact two-phase simplex: minimize ``c x`` s.t. ``A_ub x <= b_ub``, ``x >= 0``.

    Inputs are converted to :class:`fractions.Fraction`; returns
    ``(x, value)`` as Fractions.
    """
    c = [Fraction(v) for v in c]
    A = [[Fraction(v) for v in row] for row in A_ub]
    b = [Fraction(v) for v in b_ub]
    m, n = len(A), len(c)
    neg = [i for i in range(m) if b[i] < 0]
    n_art = len(neg)
    width = n + m + n_art
    tab, basis = [], []
    for i in range(m):
        sign = -1 if b[i] < 0 else 1
        row = [sign * v for v in A[i]]
        row += [Fraction(sign if j == i else 0) for j in range(m)]
        row += [Fraction(1 if (sign < 0 and neg.index(i) == q) else 0) for q in range(n_art)]
        row.append(sign * b[i])
        tab.append(row)
        basis.append(n + m + neg.index(i) if sign < 0 else n + i)

    if n_art:
        phase1 = [Fraction(0)] * (n + m) + [Fraction(1)] * n_art
        _run(tab, basis, phase1, [True] * width)
        infeas = sum(tab[r][-1] for r in range(m) if basis[r] >= n + m)
        if infeas != 0:
            raise NoRootError("linear program is infeasible")
        # drive zero-level artificials out of the basis
        for r in range(len(tab)):
            if basis[r] >= n + m:
                col = next((j for j in range(n + m) if tab[r][j] != 0), None)
                if col is not None:
                    _pivot(tab, basis, r, col)
        keep = [r for r in range(len(tab)) if basis[r] < n + m]
        tab = [tab[r][: n + m] + [tab[r][-1]] for r in keep]
        basis = [basis[r] for r in keep]

    cost = c + [Fraction(0)] * m
    _run(tab, basis, cost, [True] * (n + m))
    x = [Fraction(0)] * n
    for r, j in enumerate(basis):
        if j < n:
            x[j] = tab[r][-1]
    return x, sum(ci * xi for ci, xi in zip(c, x))


# -- load problems ------------------------------------------------------------

def _min_variation(M, offset, pairs):
    """Minimize ``sum |b_i - b_j|`` over ``pairs`` with ``b = M alpha + offset``, ``alpha in [0,1]^n``."""
    nb, na = len(M), len(M[0])
    npair = len(pairs)
    A, rhs = [], []
    for e, (i, j) in enumerate(pairs):
        diff = [M[i][v] - M[j][v] for v in range(na)]
        const = offset[i] - offset[j]
        t = [Fraction(0)] * npair
        t[e] = Fraction(-1)
        A.append(diff + t)
        rhs.append(-const)
        A.append([-x for x in diff] + t)
        rhs.append(const)
    for v in range(na):
        row = [Fraction(0)] * (na + npair)
        row[v] = Fraction(1)
        A.append(row)
        rhs.append(Fraction(1))
    cost = [Fraction(0)] * na + [Fraction(1)] * npair
    x, value = simplex_min(cost, A, rhs)
    alpha = x[:na]
    b = [sum(M[i][v] * alpha[v] for v in range(na)) + offset[i] for i in range(nb)]
    return alpha, b, value


def _as_slopes(a) -> list[Fraction]:
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 1:
        raise DimensionError("slopes must be a vector")
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise DomainError("slopes must be finite and nonnegative")
    return [Fraction(float(v)) for v in arr]


def solve_O1(a, T: float | None = None) -> tuple[LoadConfiguration, SplitFractions]:
    """Balance the full ring: minimize ``sum_i |b[i] - b[i+1]|`` cyclically."""
    s = _as_slopes(a)
    k = len(s)
    if k < 3:
        raise DimensionError(f"ring needs k >= 3 flows, got {k}")
    zero = Fraction(0)
    M = [[zero] * k for _ in range(k)]
    offset = []
    for i in range(k):
        nxt = (i + 1) % k
        M[i][i] += s[i]
        M[i][nxt] -= s[nxt]
        offset.append(s[nxt])
    pairs = [(i, (i + 1) % k) for i in range(k)]
    alpha, b, D = _min_variation(M, offset, pairs)
    return (LoadConfiguration(np.array([float(v) for v in b]), float(D), T),
            SplitFractions(np.array([float(v) for v in alpha])))


def solve_O2(a, T: float | None = None) -> tuple[LoadConfiguration, SplitFractions]:
    """Balance the ``l + 1`` servers fed by ``l`` connected flows.

    ``a`` lists the flow slopes along the arc.  End servers get a share of a
    single flow only.  The returned fractions have one entry per flow.
    """
    s = _as_slopes(a)
    l = len(s)
    if l < 1:
        raise DimensionError("arc needs at least one flow")
    zero = Fraction(0)
    # server j (0..l) gets alpha_j-1 * a_j-1 from its left flow and (1 - alpha_j) * a_j from its right
    M = [[zero] * l for _ in range(l + 1)]
    offset = [zero] * (l + 1)
    for j in range(l + 1):
        if j >= 1:
            M[j][j - 1] += s[j - 1]
        if j < l:
            M[j][j] -= s[j]
            offset[j] += s[j]
    pairs = [(j, j + 1) for j in range(l)]
    alpha, b, D = _min_variation(M, offset, pairs)
    return (LoadConfiguration(np.array([float(v) for v in b]), float(D), T),
            SplitFractions(np.array([float(v) for v in alpha])))


def _balanced(D: float, a, tol: float) -> bool:
    return D <= tol * max(1.0, float(np.sum(a)))


def is_balanced(a_subset, tol: float = BALANCE_TOL) -> bool:
    """True when a connected group of flows can load its servers evenly."""
    D = solve_O2(a_subset)[0].D
    return _balanced(D, a_subset, tol)


def is_ring_balanced(a, tol: float = BALANCE_TOL) -> bool:
    return _balanced(solve_O1(a)[0].D, a, tol)


def _arc(k: int, left: int, length: int) -> tuple[int, ...]:
    return tuple((i - left) % k for i in range(length))


def maximal_balanced_sets(a, tol: float = BALANCE_TOL) -> list[tuple[int, ...]]:
    """Connected balanced groups containing flow 0 that no one-flow extension keeps balanced.

    Groups are returned as tuples of 0-based flow indices in ring order
    starting from the leftmost member.  The full ring is tested with O1.
    """
    arr = np.asarray(a, dtype=float)
    k = len(arr)
    if k < 3:
        raise DimensionError(f"ring needs k >= 3 flows, got {k}")
    cache: dict[tuple[int, ...], bool] = {}

    def balanced(arc: tuple[int, ...]) -> bool:
        key = arc if len(arc) < k else tuple(range(k))
        if key not in cache:
            if len(arc) < k:
                cache[key] = is_balanced(arr[list(arc)], tol)
            else:
                cache[key] = is_ring_balanced(arr, tol)
        return cache[key]

    if balanced(tuple(range(k))):
        return [tuple(range(k))]
    found = []
    for length in range(1, k):
        for left in range(length):
            arc = _arc(k, left, length)
            if not balanced(arc):
                continue
            if length == k - 1:
                grown = [tuple(range(k))]
            else:
                grown = [_arc(k, left + 1, length + 1), _arc(k, left, length + 1)]
            if not any(balanced(g) for g in grown):
                found.append(arc)
    return found
