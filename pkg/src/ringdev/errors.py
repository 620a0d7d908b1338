"""Exception types raised across the package."""


class RingDevError(Exception):
    """Base class for all package errors."""


class DomainError(RingDevError, ValueError):
    """An argument lies outside the domain of the requested function."""


class NoRootError(RingDevError, ArithmeticError):
    """A root or crossing that was asked for does not exist in the search range."""


class InfeasibleError(RingDevError):
    """The requested overload cannot be reached (load slope does not exceed 1)."""


class DimensionError(RingDevError, ValueError):
    """Wrong vector length or ring size."""


class StabilityError(RingDevError):
    """Nominal dynamics are not stationary (lambda * E[xi] >= 1)."""


class InsufficientHits(RingDevError):
    """Too few replicas hit the overload event to condition on."""
