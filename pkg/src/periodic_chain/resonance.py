"""Closed forms and tuners for the two forced double-well examples.

Half-period (square-wave) forcing: rates ``phi0 = p exp(-V/eps)`` and
``phi1 = q exp(-v/eps)`` swap every half period. Constant-trace forcing:
``phi_minus, phi_plus = eps (a -+ cos(omega t))``. In both cases the tuning
target is one up-crossing per period on stationary average.

Arrhenius levels are carried as logarithms so that small ``eps`` never
underflows; every formula below is written in terms of ``log phi0``,
``log phi1`` and ``log T``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .pspm import mean_transitions
from .rates import RateSpec
from .roots import BracketError, expand_bracket, find_root


@dataclass(frozen=True)
class HalfPeriodParams:
    p: float
    q: float
    V: float
    v: float
    eps: float
    T: float | None = None

    def __post_init__(self):
        for name in ("p", "q", "eps"):
            x = getattr(self, name)
            if not (math.isfinite(x) and x > 0):
                raise ValueError(f"{name} must be finite and > 0, got {x!r}")
        if not (math.isfinite(self.V) and math.isfinite(self.v)):
            raise ValueError("barriers must be finite")
        if not self.v < self.V:
            raise ValueError("requires v < V")
        if self.T is not None and not (math.isfinite(self.T) and self.T > 0):
            raise ValueError(f"T must be finite and > 0, got {self.T!r}")

    @property
    def log_phi0(self):
        return math.log(self.p) - self.V / self.eps

    @property
    def log_phi1(self):
        return math.log(self.q) - self.v / self.eps

    @property
    def phi0(self):
        return math.exp(self.log_phi0)

    @property
    def phi1(self):
        return math.exp(self.log_phi1)

    def with_period(self, T):
        return replace(self, T=float(T))

    def to_spec(self) -> RateSpec:
        return RateSpec.arrhenius_half(self.p, self.q, self.V, self.v, self.eps, self._period())

    def _period(self):
        if self.T is None:
            raise ValueError("period T not set")
        return self.T


class TuningResult(NamedTuple):
    argument: float
    residual: float
    iterations: int
    bracket: tuple


# half-period example

def _half_terms(l0, l1, log_t):
    """``(phi0 phi1 T / s, r**2, s T)`` with ``s = phi0 + phi1``, ``r = (phi0 - phi1)/s``."""
    ls = np.logaddexp(l0, l1)
    linear = np.exp(l0 + l1 - ls + log_t)
    r = np.tanh(0.5 * (l0 - l1))
    return linear, r * r, np.exp(ls + log_t)


def _half_mean_log(l0, l1, log_t):
    linear, r2, sT = _half_terms(l0, l1, log_t)
    return linear + r2 * np.tanh(0.25 * sT)


def _sech2(x):
    e = np.exp(-2.0 * np.abs(x))
    return 4.0 * e / (1.0 + e) ** 2


def _half_excess(l0, l1, log_t):
    """``E - 1`` assembled from small pieces, so it keeps its relative precision
    when ``tanh`` and ``r**2`` both round to 1 (small eps)."""
    linear, r2, sT = _half_terms(l0, l1, log_t)
    one_minus_r2 = _sech2(0.5 * (l0 - l1))
    one_minus_tanh = 2.0 / (1.0 + np.exp(0.5 * sT))
    return linear - one_minus_r2 - r2 * one_minus_tanh


def _half_mean_dlog(l0, l1, log_t):
    """``d E / d log T``."""
    linear, r2, sT = _half_terms(l0, l1, log_t)
    x = 0.25 * sT
    return linear + r2 * x * _sech2(x)


def half_period_levels_mean(phi0, phi1, T):
    """Stationary mean up-crossings per period for half-period rates ``phi0``, ``phi1``."""
    return float(_half_mean_log(math.log(phi0), math.log(phi1), math.log(T)))


def half_period_mean(params: HalfPeriodParams, T=None):
    """``phi0 phi1 T/(phi0+phi1) + ((phi0-phi1)/(phi0+phi1))**2 tanh((phi0+phi1) T/4)``.

    ``T`` overrides ``params.T`` and may be an array.
    """
    T = params._period() if T is None else T
    out = _half_mean_log(params.log_phi0, params.log_phi1, np.log(T))
    return float(out) if np.ndim(out) == 0 else out


def half_period_pspm(params: HalfPeriodParams, t, T=None):
    """Stationary probability of -1 at time ``t`` (any real, reduced mod T)."""
    T = params._period() if T is None else float(T)
    l0, l1 = params.log_phi0, params.log_phi1
    ls = float(np.logaddexp(l0, l1))
    s = math.exp(ls)
    r = math.tanh(0.5 * (l0 - l1))
    base = 1.0 / (1.0 + math.exp(l0 - l1))  # phi1 / s
    tt = np.mod(np.asarray(t, dtype=float), T)
    second = tt >= 0.5 * T
    u = np.where(second, tt - 0.5 * T, tt)
    first_half = np.exp(-s * u) / (1.0 + math.exp(-0.5 * s * T)) * r + base
    out = np.where(second, 1.0 - first_half, first_half)
    return float(out) if out.ndim == 0 else out


def asymptotic_period(params: HalfPeriodParams) -> float:
    """Small-noise period ``(V - v)/(2 q eps) exp(v/eps)``."""
    return math.exp(log_asymptotic_period(params))


def log_asymptotic_period(params: HalfPeriodParams) -> float:
    return math.log((params.V - params.v) / (2.0 * params.q * params.eps)) + params.v / params.eps


def leading_order_period(params: HalfPeriodParams) -> float:
    """``2 (V - v)/(q eps) exp(v/eps)``: leading-order root of the tuning equation.

    With ``r**2 -> 1`` and ``1 - tanh(u) ~ 2 exp(-2u)`` the equation reads
    ``phi0 T ~ 2 exp(-phi1 T/2)``, hence ``phi1 T/4 ~ (V - v)/(2 eps)``.
    """
    return math.exp(math.log(2.0 * (params.V - params.v) / (params.q * params.eps))
                    + params.v / params.eps)


def tune_half_period(params: HalfPeriodParams, T_bracket=None, max_doublings=200) -> TuningResult:
    """Period at which the stationary mean up-crossing count per period is 1.

    Solved in ``log T``; the bracket (default: the asymptotic period) is
    widened by factors of 2 until it straddles the root. The mean is
    increasing in ``T``, so the root is unique.
    """
    l0, l1 = params.log_phi0, params.log_phi1

    def f(x):
        return float(_half_excess(l0, l1, x))

    def fp(x):
        return float(_half_mean_dlog(l0, l1, x))

    if T_bracket is None:
        g = log_asymptotic_period(params)
        lo = hi = g
    else:
        lo, hi = math.log(T_bracket[0]), math.log(T_bracket[1])
    lo, hi = expand_bracket(f, lo, hi, max_expansions=max_doublings, log_space=True)
    if lo == hi:
        return TuningResult(math.exp(lo), abs(f(lo)), 0, (math.exp(lo), math.exp(hi)))
    res = find_root(f, lo, hi, fp)
    return TuningResult(math.exp(res.x), abs(res.fx), res.iterations,
                        (math.exp(res.bracket[0]), math.exp(res.bracket[1])))


def quality_measure(spec: RateSpec) -> float:
    """``|E_mu[N_T] - 1|`` from the stationary measure of ``spec``."""
    return abs(mean_transitions(spec) - 1.0)


# constant-trace example

class ConstantTraceMean(NamedTuple):
    mu_minus_zero: float
    mean: float


def _check_trace(eps, a, omega):
    if not (eps > 0 and omega > 0):
        raise ValueError("eps and omega must be > 0")
    if not a > 1:
        raise ValueError("requires a > 1")


def constant_trace_pspm(eps, a, omega, t):
    """``1/2 - eps (2 a eps cos(omega t) + omega sin(omega t)) / (4 a^2 eps^2 + omega^2)``."""
    _check_trace(eps, a, omega)
    t = np.asarray(t, dtype=float)
    out = 0.5 - eps * (2 * a * eps * np.cos(omega * t) + omega * np.sin(omega * t)) / (
        4 * a * a * eps * eps + omega * omega)
    return float(out) if out.ndim == 0 else out


def constant_trace_mean(eps, a, omega) -> ConstantTraceMean:
    """``mu_minus(0)`` and ``eps a T/2 - eps^3 a T / (4 eps^2 a^2 + omega^2)``, ``T = 2 pi/omega``."""
    _check_trace(eps, a, omega)
    T = 2 * math.pi / omega
    den = 4 * eps * eps * a * a + omega * omega
    return ConstantTraceMean(0.5 - 2 * a * eps * eps / den,
                             eps * a * T / 2 - eps ** 3 * a * T / den)


def resonance_cubic(mu, a):
    """``mu^3 - pi a mu^2 + 4 a^2 mu + 2 pi a (1 - 2 a^2)``; zero at the tuned ``omega/eps``."""
    return mu ** 3 - math.pi * a * mu ** 2 + 4 * a * a * mu + 2 * math.pi * a * (1 - 2 * a * a)


def _cubic_prime(mu, a):
    return 3 * mu * mu - 2 * math.pi * a * mu + 4 * a * a


def tune_constant_trace(a) -> TuningResult:
    """Unique positive root ``mu_opt`` of the resonance cubic; use ``omega = mu_opt * eps``."""
    if not a > 1:
        raise ValueError("requires a > 1")

    def f(mu):
        return resonance_cubic(mu, a)

    lo, hi = 0.0, max(1.0, math.pi * a)
    n = 0
    while f(hi) <= 0:
        lo, hi = hi, 2 * hi
        n += 1
        if n > 200:
            raise BracketError("cubic never became positive")
    res = find_root(f, lo, hi, lambda m: _cubic_prime(m, a))
    return TuningResult(res.x, abs(res.fx), res.iterations, res.bracket)


__all__ = [
    "HalfPeriodParams", "TuningResult", "ConstantTraceMean", "BracketError",
    "half_period_mean", "half_period_levels_mean", "half_period_pspm",
    "asymptotic_period", "log_asymptotic_period", "leading_order_period", "tune_half_period", "quality_measure",
    "constant_trace_pspm", "constant_trace_mean", "resonance_cubic", "tune_constant_trace",
]
