"""Fixed-step RK4 propagators for the periodic linear systems of the chain.

Two systems share this engine:

* the forward equation for the distribution, integrated in sum/difference
  coordinates ``(nu_minus + nu_plus, nu_plus - nu_minus)`` where the
  generator is lower triangular and the total mass is conserved exactly;
* the generating-function equation ``Psi' = Q(eta, t) Psi`` in the
  ``(psi_minus, psi_plus)`` coordinates.

The ODE is linear, so each RK4 step is a fixed 2x2 matrix.  Step grids are
built on ``[0, T]`` and reused for every period; breakpoints of the rates are
always grid nodes, and stage evaluations at the end of a step use left
limits.
"""

from __future__ import annotations

import warnings
from functools import lru_cache

import numpy as np

from .linalg2 import ScaledMatrix, chain_product, det2, eig2, signed_log_product
from .rates import RateSpec, eval_rates, smooth_nodes

DEFAULT_STEPS = 4096
RICHARDSON_TOL = 1e-10


class ResolutionWarning(UserWarning):
    """Step halving moved a result by more than the resolution tolerance."""


def check_steps(steps_per_period):
    if int(steps_per_period) != steps_per_period or steps_per_period < 16:
        raise ValueError(f"steps_per_period must be an integer >= 16, got {steps_per_period!r}")
    return int(steps_per_period)


@lru_cache(maxsize=64)
def step_nodes(spec: RateSpec, start: float, stop: float, steps_per_period: int):
    """Grid on ``[start, stop]`` inside one period: uniform grid plus rate nodes."""
    T = spec.period
    if not 0 <= start < stop <= T:
        raise ValueError("need 0 <= start < stop <= T")
    uniform = np.linspace(0.0, T, steps_per_period + 1)
    pts = np.concatenate([uniform, np.asarray(smooth_nodes(spec)), [start, stop]])
    pts = np.unique(pts[(pts >= start) & (pts <= stop)])
    pts.setflags(write=False)
    return pts


def _generator(spec, t, side, eta, coords):
    m, p = eval_rates(spec, t, side)
    q = np.zeros(np.shape(t) + (2, 2))
    if coords == "sumdiff":
        q[..., 1, 0] = m - p
        q[..., 1, 1] = -(m + p)
    else:
        q[..., 0, 0] = -m
        q[..., 0, 1] = p
        q[..., 1, 0] = eta * m
        q[..., 1, 1] = -p
    return q


def rk4_step_matrices(spec, nodes, eta=1.0, coords="standard"):
    """One RK4 propagation matrix per grid step."""
    a, b = nodes[:-1], nodes[1:]
    h = (b - a)[:, None, None]
    eye = np.eye(2)
    a0 = _generator(spec, a, "right", eta, coords)
    am = _generator(spec, 0.5 * (a + b), "right", eta, coords)
    a1 = _generator(spec, b, "left", eta, coords)
    k1 = a0
    k2 = am @ (eye + 0.5 * h * k1)
    k3 = am @ (eye + 0.5 * h * k2)
    k4 = a1 @ (eye + h * k3)
    return eye + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@lru_cache(maxsize=64)
def period_steps(spec, eta, steps_per_period, coords="standard", start=0.0, stop=None):
    """Nodes and step matrices over ``[start, stop]`` (default: one full period)."""
    nodes = step_nodes(spec, start, spec.period if stop is None else stop, steps_per_period)
    mats = rk4_step_matrices(spec, nodes, eta, coords)
    mats.setflags(write=False)
    return nodes, mats


class Monodromy:
    """One-period propagator of the RK4 scheme with its Floquet data.

    The determinant is accumulated from the per-step determinants, which is
    exact in exact arithmetic and avoids the cancellation in ``ad - bc`` of
    the product when one multiplier is tiny.
    """

    def __init__(self, spec, eta, steps_per_period, coords="standard"):
        self.spec = spec
        self.eta = float(eta)
        self.steps = steps_per_period
        _, mats = period_steps(spec, self.eta, steps_per_period, coords)
        self.scaled: ScaledMatrix = chain_product(mats)
        self.det_sign, self.log_abs_det = signed_log_product(det2(mats))

    @property
    def matrix(self):
        return self.scaled.value()

    def log_multipliers(self):
        """``(log rho1, log rho2)`` for positive multipliers, largest first."""
        m = self.scaled.mantissa
        shift = self.scaled.log_scale()
        det_m = self.det_sign * np.exp(self.log_abs_det - 2 * shift)
        r1, r2 = eig2(float(m[0, 0] + m[1, 1]), float(det_m))
        if r1 <= 0 or r2 <= 0:
            raise ValueError("monodromy multipliers are not both positive")
        return np.log(r1) + shift, np.log(r2) + shift


def monodromy(spec, eta=1.0, steps_per_period=DEFAULT_STEPS, coords="standard", check=True):
    """RK4 monodromy of the chosen system; warns if step halving moves it by > 1e-10."""
    steps = check_steps(steps_per_period)
    mono = Monodromy(spec, eta, steps, coords)
    if check:
        fine = Monodromy(spec, eta, 2 * steps, coords)
        gap = richardson_gap(mono.scaled, fine.scaled)
        if gap > RICHARDSON_TOL:
            warnings.warn(
                f"monodromy moved by {gap:.3e} (relative) under step halving; "
                f"increase steps_per_period", ResolutionWarning, stacklevel=2)
    return mono


def richardson_gap(coarse: ScaledMatrix, fine: ScaledMatrix):
    shift = coarse.exponent - fine.exponent
    a = np.ldexp(coarse.mantissa, shift)
    b = fine.mantissa
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def propagate(spec, vec, t_end, eta=1.0, steps_per_period=DEFAULT_STEPS, coords="standard"):
    """Solution at ``t_end`` from ``vec`` at time 0 (whole periods, then a partial one)."""
    T = spec.period
    k = int(np.floor(t_end / T))
    rem = t_end - k * T
    v = np.asarray(vec, dtype=float)
    if k:
        _, mats = period_steps(spec, float(eta), steps_per_period, coords)
        for _ in range(k):
            for r in mats:
                v = r @ v
    if rem > 0:
        _, mats = period_steps(spec, float(eta), steps_per_period, coords, 0.0, rem)
        for r in mats:
            v = r @ v
    return v


__all__ = [
    "DEFAULT_STEPS", "ResolutionWarning", "Monodromy", "monodromy", "propagate",
    "rk4_step_matrices", "step_nodes", "period_steps", "eig2",
]
