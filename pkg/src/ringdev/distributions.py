"""Message-length laws and their exponential-moment machinery.

Three laws are supported, each parameterized by a rate/scale ``c``:

* ``exp``  -- exponential with density ``c exp(-c x)``;
* ``mix``  -- equal-weight mixture of exponentials with rates ``c + g`` and
  ``c - g`` (``0 <= g < c``);
* ``det``  -- the constant length ``1 / c``.

Every law exposes its moment generating function ``phi``, the derivative
``phi'``, the right end ``theta_plus`` of the domain where ``phi`` is finite,
and a sampler.  ``phi - 1`` is also available directly so that small-tilt
evaluations do not lose precision to cancellation.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Literal

import numpy as np

from ._bisect import bisect_increasing_crossing, expand_upper
from .errors import DomainError, NoRootError

Kind = Literal["exp", "mix", "det"]

_DESCRIPTOR = re.compile(r"^\s*(exp|mix|det)\s*:\s*(.*)$")


@dataclass(frozen=True)
class MessageLengthModel:
    kind: Kind
    c: float
    g: float = 0.0

    def __post_init__(self):
        if self.kind not in ("exp", "mix", "det"):
            raise DomainError(f"unknown length law {self.kind!r}")
        if not (self.c > 0 and math.isfinite(self.c)):
            raise DomainError(f"c must be positive and finite, got {self.c!r}")
        if self.kind == "mix":
            if not (0.0 <= self.g < self.c):
                raise DomainError(f"mixture needs 0 <= g < c, got g={self.g!r}, c={self.c!r}")
        elif self.g != 0.0:
            raise DomainError(f"g is only meaningful for the mixture law, got g={self.g!r}")

    # -- constructors -----------------------------------------------------
    @classmethod
    def exponential(cls, c: float) -> "MessageLengthModel":
        return cls("exp", float(c))

    @classmethod
    def mixture(cls, c: float, g: float) -> "MessageLengthModel":
        return cls("mix", float(c), float(g))

    @classmethod
    def deterministic(cls, c: float) -> "MessageLengthModel":
        return cls("det", float(c))

    @classmethod
    def parse(cls, text: str) -> "MessageLengthModel":
        """Parse ``exp:c=1``, ``mix:c=1,g=0.5`` or ``det:c=2``."""
        m = _DESCRIPTOR.match(text)
        if m is None:
            raise DomainError(f"bad model descriptor {text!r}; expected exp:c=..., mix:c=...,g=... or det:c=...")
        kind, rest = m.group(1), m.group(2)
        fields = {}
        for part in filter(None, (p.strip() for p in rest.split(","))):
            key, sep, value = part.partition("=")
            if not sep:
                raise DomainError(f"bad field {part!r} in {text!r}")
            try:
                fields[key.strip()] = float(value)
            except ValueError:
                raise DomainError(f"non-numeric value in {part!r}") from None
        expected = {"c", "g"} if kind == "mix" else {"c"}
        if set(fields) != expected:
            raise DomainError(f"{kind} needs fields {sorted(expected)}, got {sorted(fields)}")
        return cls(kind, fields["c"], fields.get("g", 0.0))

    def descriptor(self) -> str:
        if self.kind == "mix":
            return f"mix:c={self.c!r},g={self.g!r}"
        return f"{self.kind}:c={self.c!r}"

    # -- analytic quantities ---------------------------------------------
    @property
    def theta_plus(self) -> float:
        if self.kind == "exp":
            return self.c
        if self.kind == "mix":
            return self.c - self.g
        return math.inf

    @property
    def eps_dom(self) -> float:
        tp = self.theta_plus
        return 1e-12 * max(1.0, tp) if math.isfinite(tp) else 0.0

    @property
    def theta_cap(self) -> float:
        """Largest tilt any search is allowed to probe."""
        return self.theta_plus - self.eps_dom

    @property
    def mean(self) -> float:
        if self.kind == "mix":
            return self.c / (self.c * self.c - self.g * self.g)
        return 1.0 / self.c

    @property
    def hat_lambda(self) -> float:
        """Per-flow stability boundary ``1 / phi'(0)``."""
        if self.kind == "mix":
            return (self.c * self.c - self.g * self.g) / self.c
        return self.c

    def _check(self, theta: float) -> None:
        if not theta < self.theta_plus:
            raise DomainError(f"theta={theta!r} outside the MGF domain (theta_plus={self.theta_plus!r})")

    def mgf_minus_one(self, theta: float) -> float:
        """``phi(theta) - 1`` without cancellation at small ``theta``."""
        self._check(theta)
        c = self.c
        if self.kind == "exp":
            return theta / (c - theta)
        if self.kind == "mix":
            u = c - theta
            return theta * u / ((u - self.g) * (u + self.g))
        return math.expm1(theta / c)

    def mgf(self, theta: float) -> float:
        self._check(theta)
        if theta == 0.0:
            return 1.0
        if self.kind == "det":
            return math.exp(theta / self.c)
        return 1.0 + self.mgf_minus_one(theta)

    def mgf_prime(self, theta: float) -> float:
        self._check(theta)
        c = self.c
        if self.kind == "exp":
            return c / (c - theta) ** 2
        if self.kind == "mix":
            g = self.g
            u = c - theta
            den = (u - g) * (u + g)
            return ((c - 2.0 * theta) * den + 2.0 * theta * u * u) / (den * den)
        return math.exp(theta / c) / c

    def mgf_prime_inverse(self, target: float) -> float:
        """Solve ``phi'(theta) = target`` for ``theta`` (``target >= phi'(0)``)."""
        base = self.mgf_prime(0.0)
        if target < base:
            raise DomainError(f"phi' target {target!r} below phi'(0)={base!r}")
        if target == base:
            return 0.0
        c = self.c
        if self.kind == "exp":
            return c - math.sqrt(c / target)
        if self.kind == "det":
            return c * math.log(c * target)
        cap = self.theta_cap
        if not self.mgf_prime(cap) > target:
            raise NoRootError(f"phi' never reaches {target!r} below theta_plus")
        f = lambda t: self.mgf_prime(t) - target
        hi = expand_upper(f, 0.0, cap=cap, start=cap)
        return bisect_increasing_crossing(f, 0.0, hi)

    def legendre(self, lam: float, a: float) -> tuple[float, float]:
        """Return ``(sup_theta {theta a - lam (phi(theta) - 1)}, maximizer)``."""
        if not lam > 0:
            raise DomainError(f"lambda must be positive, got {lam!r}")
        mean_slope = lam * self.mgf_prime(0.0)
        if a < mean_slope * (1.0 - 1e-14):
            raise DomainError(f"slope {a!r} below the mean slope {mean_slope!r}")
        if a <= mean_slope:
            return 0.0, 0.0
        theta = self.mgf_prime_inverse(a / lam)
        value = theta * a - lam * self.mgf_minus_one(theta)
        return max(value, 0.0), theta

    # -- sampling --------------------------------------------------------
    def _phases(self, theta: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
        """Exponential phases (weights, rates) of the law tilted by ``theta``."""
        if self.kind == "exp":
            return np.array([1.0]), np.array([self.c - theta])
        rates = np.array([self.c + self.g, self.c - self.g])
        w = 0.5 * rates / (rates - theta)
        return w / w.sum(), rates - theta

    def sample(self, rng: np.random.Generator, size=None, theta: float = 0.0):
        """Draw lengths from the law, optionally exponentially tilted by ``theta``.

        The tilted law has density ``exp(theta x) f(x) / phi(theta)``; for the
        constant law tilting changes nothing.
        """
        if theta != 0.0:
            self._check(theta)
        if self.kind == "det":
            if size is None:
                return 1.0 / self.c
            return np.full(size, 1.0 / self.c)
        weights, rates = self._phases(theta)
        if len(rates) == 1:
            return rng.exponential(1.0 / rates[0], size)
        pick = rng.random(size) < weights[0]
        scale = np.where(pick, 1.0 / rates[0], 1.0 / rates[1])
        return rng.exponential(1.0, size) * scale


def parse_model(text: str) -> MessageLengthModel:
    return MessageLengthModel.parse(text)


def mgf(model: MessageLengthModel, theta: float) -> float:
    return model.mgf(theta)


def mgf_prime(model: MessageLengthModel, theta: float) -> float:
    return model.mgf_prime(theta)


def theta_plus(model: MessageLengthModel) -> float:
    return model.theta_plus


def hat_lambda(model: MessageLengthModel) -> float:
    return 1.0 / model.mgf_prime(0.0)


def legendre(model: MessageLengthModel, lam: float, a: float) -> tuple[float, float]:
    return model.legendre(lam, a)


def sample(model: MessageLengthModel, rng: np.random.Generator) -> float:
    return float(model.sample(rng))
