"""Critical input rates where the cheapest overheating scenario changes.

Writing ``v_l = (l + 1) theta(lam, l)`` and ``v*_k = k theta*(lam)``, two
scenarios cost the same exactly where their curves meet in the
``(lam, v)`` plane.  Each crossing is found in ``v`` first (the equation
there does not involve ``lam``) and then mapped back to a rate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._bisect import bisect_increasing_crossing, expand_upper
from .distributions import MessageLengthModel
from .errors import DimensionError, DomainError, NoRootError
from .ldp_rates import NetworkParams, scenario


@dataclass
class CriticalRateTable:
    k: int
    hat_lambda: float
    lambda_star: dict[int, float]
    lambda_l1: dict[int, float]
    lambda_lower: float
    lambda_upper: float
    pairs: dict[tuple[int, int], float] = field(default_factory=dict)


@dataclass
class PhaseDiagram:
    k: int
    d: float
    lambdas: np.ndarray
    l_opt: np.ndarray
    J: np.ndarray  # shape (len(lambdas), k); NaN marks infeasible l
    feasible: np.ndarray


def _crossing(model: MessageLengthModel, m1: int, s1: int, m2: int, s2: int, cap_scale: int) -> float:
    """Positive root of ``m1 (phi(v/s1) - 1) = m2 (phi(v/s2) - 1)`` with ``s1 < s2``.

    Near zero the left side is the smaller one (ratio ``m1 s2 / (m2 s1) < 1``);
    the left side diverges first, so there is one sign change.
    """
    h = lambda v: m1 * model.mgf_minus_one(v / s1) - m2 * model.mgf_minus_one(v / s2)
    cap = cap_scale * model.theta_cap
    lo = 1e-6 * min(1.0, cap)
    while h(lo) >= 0.0:
        lo *= 0.5
        if lo < 1e-200:
            raise NoRootError("curves do not separate near zero")
    hi = expand_upper(h, lo, cap=cap)
    return bisect_increasing_crossing(h, lo, hi)


def lambda_star_kl(model: MessageLengthModel, k: int, l: int) -> tuple[float, float]:
    """Rate where ``l`` overheated flows and all ``k`` flows cost the same.

    Returns ``(lambda*_{k,l}, v*_{k,l})``.  No crossing exists for
    ``l = k - 1``: that group already covers every server and is always
    dearer than the full ring.
    """
    if k < 3:
        raise DimensionError(f"k must be >= 3, got {k!r}")
    if not 1 <= l <= k - 1:
        raise DomainError(f"l must lie in 1..{k - 1}, got {l!r}")
    if l == k - 1:
        raise NoRootError(f"l = k - 1 = {l}: J(lam, k-1) > J(lam, k) for every lam, no crossing")
    v = _crossing(model, l, l + 1, k, k, l + 1)
    lam = v / (k * model.mgf_minus_one(v / k))
    return lam, v


def lambda_l2l1(model: MessageLengthModel, l2: int, l1: int) -> tuple[float, float]:
    """Rate where overheating ``l1`` and ``l2 > l1`` connected flows cost the same.

    May exceed ``hat_lambda``; it is always below ``hat_lambda (l2 + 1) / l2``.
    """
    if not 1 <= l1 < l2:
        raise DomainError(f"need 1 <= l1 < l2, got l1={l1!r}, l2={l2!r}")
    v = _crossing(model, l1, l1 + 1, l2, l2 + 1, l1 + 1)
    lam = v / (l2 * model.mgf_minus_one(v / (l2 + 1)))
    return lam, v


def lambda_lower(model: MessageLengthModel, k: int) -> float:
    """Largest rate below which overheating ``f_1`` alone is cheapest.

    The first crossing of ``v_1`` with any competitor: ``v*_k`` or ``v_l``
    for ``2 <= l <= k - 1``.
    """
    if k < 3:
        raise DimensionError(f"k must be >= 3, got {k!r}")
    candidates = [lambda_star_kl(model, k, 1)[0]]
    candidates += [lambda_l2l1(model, l, 1)[0] for l in range(2, k)]
    return min(candidates)


def lambda_upper(model: MessageLengthModel, k: int) -> float:
    """Smallest rate above which overheating all ``k`` flows is cheapest."""
    if k < 3:
        raise DimensionError(f"k must be >= 3, got {k!r}")
    return max(lambda_star_kl(model, k, l)[0] for l in range(1, k - 1))


def critical_table(model: MessageLengthModel, k: int,
                   pairs: list[tuple[int, int]] | None = None) -> CriticalRateTable:
    stars = {l: lambda_star_kl(model, k, l)[0] for l in range(1, k - 1)}
    l1 = {l: lambda_l2l1(model, l, 1)[0] for l in range(2, k)}
    extra = {}
    for l2, l1_ in pairs or []:
        extra[(l2, l1_)] = lambda_l2l1(model, l2, l1_)[0]
    return CriticalRateTable(
        k=k,
        hat_lambda=model.hat_lambda,
        lambda_star=stars,
        lambda_l1=l1,
        lambda_lower=min([stars[1], *l1.values()]),
        lambda_upper=max(stars.values()),
        pairs=extra,
    )


def phase_sweep(model: MessageLengthModel, k: int, d: float, lambdas) -> PhaseDiagram:
    grid = np.asarray(lambdas, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise DomainError("lambda grid must be a non-empty vector")
    if np.any(np.diff(grid) <= 0):
        raise DomainError("lambda grid must be strictly increasing")
    if grid[0] <= 0 or grid[-1] >= model.hat_lambda:
        raise DomainError(f"lambda grid must lie in (0, {model.hat_lambda!r})")
    J = np.full((grid.size, k), math.nan)
    l_opt = np.zeros(grid.size, dtype=int)
    for i, lam in enumerate(grid):
        rep = scenario(NetworkParams(k, float(lam), d, model))
        for l, v in rep.J.items():
            J[i, l - 1] = v
        l_opt[i] = rep.l_opt
    return PhaseDiagram(k=k, d=d, lambdas=grid, l_opt=l_opt, J=J, feasible=~np.isnan(J))
