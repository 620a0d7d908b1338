import math

from .errors import NoRootError


def bisect_increasing_crossing(f, lo, hi, rtol=1e-15, max_iter=400):
    """Locate the sign change of ``f`` on ``[lo, hi]`` with ``f(lo) < 0 < f(hi)``.

    Iterates until the bracket width is below ``rtol * hi`` or the midpoint
    can no longer be distinguished from an endpoint in floating point.
    """
    flo, fhi = f(lo), f(hi)
    if not (flo < 0.0 < fhi):
        raise NoRootError(f"no sign change on [{lo!r}, {hi!r}]: f={flo!r}, {fhi!r}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or hi - lo <= rtol * abs(hi):
            break
        fm = f(mid)
        if fm == 0.0:
            return mid
        if fm < 0.0:
            lo = mid
        else:
            hi = mid
    # pick the endpoint with smaller residual
    return lo if abs(f(lo)) <= abs(f(hi)) else hi


def expand_upper(f, lo, cap=math.inf, start=1.0):
    """Grow an upper bracket point from ``lo`` until ``f`` turns positive.

    Doubles toward infinity when ``cap`` is infinite, otherwise halves the
    remaining gap to ``cap``. Returns the first point with ``f > 0``.
    """
    if math.isinf(cap):
        hi = max(start, 2.0 * lo)
        for _ in range(2000):
            v = f(hi)
            if v > 0.0:
                return hi
            if math.isnan(v) or math.isinf(hi):
                break
            hi *= 2.0
    else:
        hi = lo + 0.5 * (cap - lo)
        for _ in range(2000):
            if f(hi) > 0.0:
                return hi
            nxt = hi + 0.5 * (cap - hi)
            if nxt <= hi or nxt >= cap:
                if f(cap) > 0.0:
                    return cap
                break
            hi = nxt
    raise NoRootError(f"function stays non-positive up to {cap!r}")
