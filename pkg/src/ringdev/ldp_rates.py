"""Overload rate values for the ring, scenario by scenario.

Overheating ``l < k`` connected flows overloads ``l + 1`` servers; the
group behaves like one server of speed ``l + 1`` fed at rate ``l * lam``.
Its cost is ``J(lam, l) = (l + 1) theta(lam, l) d`` with ``theta(lam, l)``
the positive root of ``(l + 1) theta = l lam (phi(theta) - 1)``.  When every
flow overheats the cost is ``J(lam, k) = k theta* d`` with
``theta* = lam (phi(theta*) - 1)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._bisect import bisect_increasing_crossing, expand_upper
from .distributions import MessageLengthModel
from .errors import DimensionError, DomainError, InfeasibleError, NoRootError


@dataclass(frozen=True)
class NetworkParams:
    k: int
    lam: float
    d: float
    model: MessageLengthModel

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 3:
            raise DimensionError(f"ring size k must be an integer >= 3, got {self.k!r}")
        if not self.lam > 0:
            raise DomainError(f"lambda must be positive, got {self.lam!r}")
        if not self.d >= 0:
            raise DomainError(f"d must be nonnegative, got {self.d!r}")

    @property
    def stable(self) -> bool:
        return self.lam * self.model.mean < 1.0


@dataclass(frozen=True)
class OverheatProfile:
    l: int
    theta: float
    J: float
    a: float
    b: float
    T: float


@dataclass(frozen=True)
class Configuration:
    a: np.ndarray
    T: float

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        if a.ndim != 1 or np.any(a < 0):
            raise DomainError("configuration slopes must be a vector of nonnegative numbers")
        if not self.T > 0:
            raise DomainError(f"duration must be positive, got {self.T!r}")
        object.__setattr__(self, "a", a)

    @property
    def k(self) -> int:
        return len(self.a)


@dataclass(frozen=True)
class ScenarioReport:
    l_opt: int
    J: dict[int, float]
    infeasible: tuple[int, ...] = field(default_factory=tuple)


def _positive_root(model: MessageLengthModel, lam: float, weight: float) -> float:
    """Positive root of ``theta = weight * lam * (phi(theta) - 1)``."""
    g = lambda t: weight * lam * model.mgf_minus_one(t) - t
    slope0 = weight * lam * model.mgf_prime(0.0)
    if slope0 >= 1.0:
        raise NoRootError(f"lambda={lam!r} outside the validity range (weight*lambda*phi'(0)={slope0!r} >= 1)")
    lo = 1e-8
    cap = model.theta_cap
    lo = min(lo, 0.5 * cap)
    while g(lo) >= 0.0:
        lo *= 0.5
        if lo < 1e-300:
            raise NoRootError(f"root collapsed to zero at lambda={lam!r}")
    hi = expand_upper(g, lo, cap=cap)
    return bisect_increasing_crossing(g, lo, hi)


def solve_theta_l(model: MessageLengthModel, lam: float, l: int) -> float:
    """Root ``theta(lam, l)`` of ``(l + 1) theta = l lam (phi(theta) - 1)``."""
    if l < 1:
        raise DomainError(f"l must be >= 1, got {l!r}")
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam!r}")
    return _positive_root(model, lam, l / (l + 1.0))


def solve_theta_star(model: MessageLengthModel, lam: float) -> float:
    """Root ``theta*`` of ``theta = lam (phi(theta) - 1)``; needs ``lam < hat_lambda``."""
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam!r}")
    return _positive_root(model, lam, 1.0)


def _check_l(params: NetworkParams, l: int) -> None:
    if not 1 <= l <= params.k:
        raise DomainError(f"l must lie in 1..{params.k}, got {l!r}")


def rate_J(params: NetworkParams, l: int) -> float:
    _check_l(params, l)
    if l == params.k:
        return params.k * solve_theta_star(params.model, params.lam) * params.d
    return (l + 1) * solve_theta_l(params.model, params.lam, l) * params.d


def optimal_profile(params: NetworkParams, l: int) -> OverheatProfile:
    """Optimal overheating slope, server load slope and duration for ``l`` flows."""
    _check_l(params, l)
    model, lam, d = params.model, params.lam, params.d
    if l == params.k:
        theta = solve_theta_star(model, lam)
        a = lam * model.mgf_prime(theta)
        b = a
        J = params.k * theta * d
    else:
        theta = solve_theta_l(model, lam, l)
        a = lam * model.mgf_prime(theta)
        b = a * l / (l + 1.0)
        J = (l + 1) * theta * d
    if not b > 1.0:
        raise InfeasibleError(f"load slope b={b!r} <= 1 for l={l}; overload unreachable")
    return OverheatProfile(l=l, theta=theta, J=J, a=a, b=b, T=d / (b - 1.0))


def scenario(params: NetworkParams) -> ScenarioReport:
    """Evaluate ``J(lam, l)`` for every ``l`` and pick the cheapest (smallest ``l`` on ties)."""
    if not params.stable:
        raise DomainError(
            f"lambda={params.lam!r} >= hat_lambda={params.model.hat_lambda!r}; no stationary regime"
        )
    values: dict[int, float] = {}
    infeasible = []
    for l in range(1, params.k + 1):
        try:
            prof = optimal_profile(params, l)
        except (InfeasibleError, NoRootError):
            infeasible.append(l)
            continue
        values[l] = prof.J
    if not values:
        raise InfeasibleError("no feasible overheating scenario")
    best = min(values.values())
    l_opt = min(l for l, v in values.items() if v == best)
    return ScenarioReport(l_opt=l_opt, J=values, infeasible=tuple(infeasible))


def configuration_rate(model: MessageLengthModel, lam: float, X: Configuration) -> float:
    """Rate of a piecewise-linear input configuration: ``T * sum_i Lambda*(a_i)``."""
    return X.T * math.fsum(model.legendre(lam, float(ai))[0] for ai in X.a)


def balanced_set_rate(model: MessageLengthModel, lam: float, h: float, size: int, T: float) -> float:
    """Rate of ``size`` flows all overheated at the common slope ``h`` for time ``T``."""
    if size < 1:
        raise DomainError(f"set size must be >= 1, got {size!r}")
    if not T > 0:
        raise DomainError(f"duration must be positive, got {T!r}")
    value, _ = model.legendre(lam, h)
    return value * T * size
