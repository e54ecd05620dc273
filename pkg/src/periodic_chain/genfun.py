"""Generating function of the up-crossing count and its Floquet spectrum.

``Psi(eta, t) = (E[eta^N_t 1{X_t=-1}], E[eta^N_t 1{X_t=+1}])`` solves
``Psi' = Q(eta, t) Psi`` with ``Q = [[-phi_minus, phi_plus], [eta*phi_minus, -phi_plus]]``.

Two exponent notions are reported side by side and never forced to agree:

* ``lambda1``: ``log(rho1)/T`` from the monodromy matrix of that ODE;
* ``mean_exponent``: ``(log eta / T) * int_0^T phi_minus mu_minus``.

They coincide at ``eta = 1`` (both zero) together with their first
derivative in ``eta``; away from ``eta = 1`` they differ in general (already
for constant rates).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .flow import DEFAULT_STEPS, ResolutionWarning, check_steps, monodromy, propagate
from .pspm import mean_transitions
from .rates import RateSpec, integrate_rates, rate_bounds

STIFFNESS_TARGET = 2.0 ** -10


class ConditioningError(ArithmeticError):
    """Monodromy eigenvectors are too close to parallel to project on."""


def generator(spec: RateSpec, eta: float, t):
    """``Q(eta, t)``; its columns sum to zero at ``eta = 1``."""
    from .rates import eval_rates

    m, p = eval_rates(spec, t)
    return np.array([[-m, p], [eta * m, -p]])


def resolve_steps(spec: RateSpec, eta: float, steps_per_period: int = DEFAULT_STEPS) -> int:
    """Steps per period actually used: ``steps_per_period`` doubled until ``h * kappa <= 2**-10``.

    ``kappa = sup(phi_minus + phi_plus) * max(1, sqrt(eta))`` bounds the
    spectral radius of ``Q(eta, t)``; RK4 determinant error scales as
    ``(h kappa)**4`` per period.
    """
    steps = check_steps(steps_per_period)
    sup_m, sup_p, _ = rate_bounds(spec)
    kappa = (sup_m + sup_p) * max(1.0, math.sqrt(eta))
    while spec.period / steps * kappa > STIFFNESS_TARGET and steps < 2 ** 22:
        steps *= 2
    return steps


def genfun_monodromy(spec: RateSpec, eta: float, steps_per_period: int = DEFAULT_STEPS):
    """Time-``T`` propagator of the generating-function ODE.

    Column ``b`` is the solution started from the ``b``-th basis vector, so
    entry ``(a, b)`` is ``E[eta^N_T 1{X_T = a} | X_0 = b]``.
    """
    if not eta > 0:
        raise ValueError("eta must be > 0")
    return monodromy(spec, eta, resolve_steps(spec, eta, steps_per_period)).matrix


@dataclass(frozen=True)
class FloquetSpectrum:
    eta: float
    period: float
    log_multipliers: tuple
    mean_exponent: float
    liouville_residual: float

    @property
    def multipliers(self):
        with np.errstate(over="ignore"):
            return tuple(float(np.exp(x)) for x in self.log_multipliers)

    @property
    def exponents(self):
        return tuple(x / self.period for x in self.log_multipliers)

    @property
    def lambda1(self):
        return self.exponents[0]

    @property
    def lambda2(self):
        return self.exponents[1]


def floquet_spectrum(spec: RateSpec, eta: float,
                     steps_per_period: int = DEFAULT_STEPS) -> FloquetSpectrum:
    if not eta > 0:
        raise ValueError("eta must be > 0")
    mono = monodromy(spec, eta, resolve_steps(spec, eta, steps_per_period))
    l1, l2 = mono.log_multipliers()
    trace_integral = integrate_rates(spec, "sum", 0.0, spec.period)
    residual = abs(math.expm1(l1 + l2 + trace_integral))
    mean_exp = math.log(eta) / spec.period * mean_transitions(spec)
    return FloquetSpectrum(float(eta), spec.period, (float(l1), float(l2)), mean_exp, residual)


@dataclass(frozen=True)
class GenfunState:
    """``Psi(eta, t)`` with its split on the two Floquet modes.

    ``modes[i]`` is ``r_i * Phi(t) u_i`` and ``periodic_parts[i]`` is that
    vector times ``exp(-lambda_i t)``, which is T-periodic.
    """

    t: float
    psi: np.ndarray
    coefficients: tuple
    modes: tuple
    periodic_parts: tuple
    exponents: tuple
    decomposition_residual: float

    @property
    def psi_minus(self):
        return float(self.psi[0])

    @property
    def psi_plus(self):
        return float(self.psi[1])


def _eigvec(m, lam):
    a = np.array([m[0, 1], lam - m[0, 0]])
    b = np.array([lam - m[1, 1], m[1, 0]])
    v = a if np.linalg.norm(a) >= np.linalg.norm(b) else b
    n = np.linalg.norm(v)
    if n == 0:
        return np.array([1.0, 0.0]) if lam == m[0, 0] else np.array([0.0, 1.0])
    v = v / n
    return v if v[np.argmax(np.abs(v))] > 0 else -v


def genfun_evolve(spec: RateSpec, eta: float, t: float, psi0,
                  steps_per_period: int = DEFAULT_STEPS, check_periods: int = 10) -> GenfunState:
    """Integrate the generating-function ODE from ``psi0`` and split it on Floquet modes."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if not eta > 0:
        raise ValueError("eta must be > 0")
    steps = resolve_steps(spec, eta, steps_per_period)
    psi0 = np.asarray(psi0, dtype=float)
    mono = monodromy(spec, eta, steps)
    l1, l2 = mono.log_multipliers()
    mant = mono.scaled.mantissa
    shift = mono.scaled.log_scale()
    vecs = [_eigvec(mant, math.exp(l - shift)) for l in (l1, l2)]
    U = np.column_stack(vecs)
    if np.linalg.cond(U) > 1e12:
        raise ConditioningError("monodromy eigenvectors are nearly parallel")
    r = np.linalg.solve(U, psi0)

    # Psi(kT) from repeated periods against the spectral form
    M = mono.matrix
    v = psi0.copy()
    worst = 0.0
    for k in range(1, check_periods + 1):
        v = M @ v
        spectral = r[0] * math.exp(k * l1) * vecs[0] + r[1] * math.exp(k * l2) * vecs[1]
        worst = max(worst, float(np.linalg.norm(v - spectral) / np.linalg.norm(v)))
    if worst > 1e-8:
        warnings.warn(f"Floquet decomposition residual {worst:.2e} exceeds 1e-8",
                      ResolutionWarning, stacklevel=2)

    psi = propagate(spec, psi0, t, eta, steps) if t > 0 else psi0.copy()
    lam = (l1 / spec.period, l2 / spec.period)
    # Phi(kT + s) u_i = rho_i^k Phi(s) u_i; propagating a subdominant mode over
    # whole periods would let rounding feed the dominant one
    k = math.floor(t / spec.period)
    s = t - k * spec.period
    modes, parts = [], []
    for i in range(2):
        part = r[i] * (propagate(spec, vecs[i], s, eta, steps) if s > 0 else vecs[i])
        part = part * math.exp(-lam[i] * s)
        parts.append(part)
        with np.errstate(over="ignore"):
            modes.append(part * np.exp(lam[i] * t))
    return GenfunState(float(t), psi, (float(r[0]), float(r[1])), tuple(modes), tuple(parts),
                       lam, worst)
