"""Bracketed scalar root finding: bisection safeguarding Newton steps."""

from __future__ import annotations

import math
from typing import Callable, NamedTuple


class BracketError(ValueError):
    """No sign change could be found or was supplied."""


class RootResult(NamedTuple):
    x: float
    fx: float
    iterations: int
    bracket: tuple


def expand_bracket(f: Callable[[float], float], lo: float, hi: float, *, factor=2.0,
                   max_expansions=200, log_space=False):
    """Widen ``[lo, hi]`` geometrically until ``f(lo) < 0 < f(hi)`` (f increasing).

    With ``log_space`` the endpoints are log-coordinates and are shifted by
    ``log(factor)`` instead of multiplied.
    """
    step = math.log(factor)
    flo, fhi = f(lo), f(hi)
    n = 0
    while flo > 0:
        if n >= max_expansions:
            raise BracketError(f"lower end never below the root after {n} expansions")
        hi, fhi = lo, flo
        lo = lo - step if log_space else lo / factor
        flo = f(lo)
        n += 1
    n = 0
    while fhi < 0:
        if n >= max_expansions:
            raise BracketError(f"upper end never above the root after {n} expansions")
        lo, flo = hi, fhi
        hi = hi + step if log_space else hi * factor
        fhi = f(hi)
        n += 1
    return lo, hi


def find_root(f: Callable[[float], float], lo: float, hi: float,
              fprime: Callable[[float], float] | None = None, *,
              ftol=0.0, xtol=4 * 2.0 ** -52, maxiter=200) -> RootResult:
    """Root of ``f`` in ``[lo, hi]`` where ``f(lo)`` and ``f(hi)`` differ in sign.

    Each iteration tries a Newton step from the current best point and falls
    back to bisection whenever the step leaves the bracket or fails to halve
    the bracket width. Stops when ``|f| <= ftol``, the bracket or a Newton
    step is smaller than ``xtol`` relative, or ``f`` vanishes.
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return RootResult(lo, 0.0, 0, (lo, hi))
    if fhi == 0:
        return RootResult(hi, 0.0, 0, (lo, hi))
    if (flo > 0) == (fhi > 0):
        raise BracketError(f"no sign change on [{lo!r}, {hi!r}]")
    x, fx = (lo, flo) if abs(flo) < abs(fhi) else (hi, fhi)
    for it in range(1, maxiter + 1):
        width = hi - lo
        cand = None
        if fprime is not None:
            d = fprime(x)
            if d != 0 and math.isfinite(d):
                step = fx / d
                if abs(step) <= xtol * max(abs(x), 1e-300):
                    return RootResult(x, fx, it, (lo, hi))
                cand = x - step
                if not (lo < cand < hi) or abs(step) > 0.5 * width:
                    cand = None
        if cand is None:
            cand = lo + 0.5 * width
        fc = f(cand)
        if (fc > 0) == (flo > 0):
            lo, flo = cand, fc
        else:
            hi, fhi = cand, fc
        if abs(fc) <= abs(fx):
            x, fx = cand, fc
        narrow = hi - lo <= xtol * max(abs(lo), abs(hi), 1e-300)
        if fc == 0 or narrow or abs(fx) <= ftol:
            return RootResult(x, fx, it, (lo, hi))
    return RootResult(x, fx, maxiter, (lo, hi))
