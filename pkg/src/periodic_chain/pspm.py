"""Periodic stationary probability measure (PSPM) of the forced chain.

The closed form used here is the variation-of-constants solution of

    d mu_minus / dt = -(phi_minus + phi_plus) mu_minus + phi_plus,

with the starting value fixed by periodicity,
``mu_minus(0) = I(phi_plus) / I(phi_minus + phi_plus)`` where
``I(f) = int_0^T f(t) exp(-int_t^T (phi_minus + phi_plus)) dt``.

Each period is cut into cells (a uniform grid refined so that the exponent
grows by at most 1/2 per cell, plus every rate breakpoint).  Inside a cell
the cumulative exponent and the forcing integral are degree-16 Legendre
series, so evaluating ``mu_minus(t)`` costs O(1).

The module also evolves arbitrary initial distributions with the RK4
engine in :mod:`periodic_chain.flow` and measures their decay rate.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from numpy.polynomial import legendre as L

from .flow import DEFAULT_STEPS, check_steps, monodromy, period_steps
from .linalg2 import prefix_products
from .quadrature import GL_ORDER, gauss_legendre_rule
from .rates import RateSpec, eval_rates, integrate_rates, rate_bounds, smooth_nodes

GRID_CELLS = 4096
MAX_CELL_EXPONENT = 0.5


class DegenerateInputError(ValueError):
    """The initial distribution already lies on the periodic solution."""


@lru_cache(maxsize=8)
def _projection():
    # coefficients of the degree-15 interpolant from values at the GL nodes
    x, w = gauss_legendre_rule(GL_ORDER)
    j = np.arange(GL_ORDER)
    vander = L.legvander(x, GL_ORDER - 1)  # (node, degree)
    return ((2 * j + 1) / 2.0)[:, None] * (vander * w[:, None]).T


class _CellGrid:
    """Per-cell Legendre representation of the exponent and forcing integrals."""

    def __init__(self, spec: RateSpec):
        T = spec.period
        sup_m, sup_p, _ = rate_bounds(spec)
        n = max(GRID_CELLS, math.ceil((sup_m + sup_p) * T / MAX_CELL_EXPONENT))
        edges = np.unique(np.concatenate([np.linspace(0.0, T, n + 1), smooth_nodes(spec)]))
        self.edges = edges
        self.half = 0.5 * np.diff(edges)
        self.mid = 0.5 * (edges[:-1] + edges[1:])
        x, w = gauss_legendre_rule(GL_ORDER)
        self.w = w
        t = self.mid[:, None] + self.half[:, None] * x[None, :]
        # evaluate strictly inside cells: no breakpoint ambiguity
        self.phi_minus, self.phi_plus = eval_rates(spec, t)
        proj = _projection()

        s_coef = (self.phi_minus + self.phi_plus) @ proj.T
        d_coef = L.legint(s_coef, lbnd=-1, axis=1) * self.half[:, None]
        self.d_coef = d_coef
        self.d_nodes = self._eval(d_coef, x)
        self.d_end = self.half * ((self.phi_minus + self.phi_plus) @ w)
        g = self.phi_plus * np.exp(self.d_nodes)
        self.g_coef = L.legint(g @ proj.T, lbnd=-1, axis=1) * self.half[:, None]
        self.g_end = self.half * (g @ w)
        self.cumulative = np.concatenate([[0.0], np.cumsum(self.d_end)])

    @staticmethod
    def _eval(coef, x):
        # every cell at the same local abscissae
        return coef @ L.legvander(x, coef.shape[1] - 1).T

    def tail_integral(self, f_nodes):
        """``I(f)`` from ``f`` sampled at the cell GL nodes."""
        total = self.cumulative[-1]
        inner = self.half * ((f_nodes * np.exp(self.d_nodes - self.d_end[:, None])) @ self.w)
        return math.fsum(np.exp(-(total - self.cumulative[1:])) * inner)

    def propagate_grid(self, mu0):
        mu = np.empty(len(self.edges))
        mu[0] = mu0
        decay = np.exp(-self.d_end)
        for k in range(len(self.half)):
            mu[k + 1] = decay[k] * (mu[k] + self.g_end[k])
        return mu


@lru_cache(maxsize=32)
def _grid(spec):
    return _CellGrid(spec)


def tail_weighted_integral(spec: RateSpec, selector: str) -> float:
    """``I(f) = int_0^T f(t) exp(-int_t^T (phi_minus + phi_plus)) dt`` for the selected rate."""
    g = _grid(spec)
    f = {"minus": g.phi_minus, "plus": g.phi_plus, "sum": g.phi_minus + g.phi_plus}
    if selector not in f:
        raise ValueError("selector must be 'minus', 'plus' or 'sum'")
    return g.tail_integral(f[selector])


@dataclass(frozen=True, eq=False)
class Pspm:
    """Periodic stationary measure of ``spec`` with its defining tail integrals."""

    spec: RateSpec
    mu_minus_zero: float
    i_plus: float
    i_minus: float
    i_sum: float

    @classmethod
    def from_spec(cls, spec: RateSpec):
        return _pspm(spec)

    def at(self, t):
        return pspm_at(self, t)

    def minus_at_nodes(self):
        """``mu_minus`` at every cell GL node, shape ``(cells, 16)``."""
        g = _grid(self.spec)
        mu = _mu_grid(self)
        x, _ = gauss_legendre_rule(GL_ORDER)
        gval = _CellGrid._eval(g.g_coef, x)
        return np.exp(-g.d_nodes) * (mu[:-1, None] + gval)

    def integrate(self, weight="minus"):
        """``int_0^T w(t) mu_minus(t) dt`` with ``w`` one of the rates or ``"one"``."""
        g = _grid(self.spec)
        w = {"minus": g.phi_minus, "plus": g.phi_plus, "one": 1.0}[weight]
        vals = w * self.minus_at_nodes()
        return math.fsum(g.half * (vals @ g.w))


@lru_cache(maxsize=32)
def _pspm(spec):
    i_plus = tail_weighted_integral(spec, "plus")
    i_minus = tail_weighted_integral(spec, "minus")
    i_sum = tail_weighted_integral(spec, "sum")
    return Pspm(spec, i_plus / i_sum, i_plus, i_minus, i_sum)


@lru_cache(maxsize=32)
def _mu_grid(p: Pspm):
    return _grid(p.spec).propagate_grid(p.mu_minus_zero)


def pspm_at(pspm: Pspm, t):
    """``(mu_minus(t), mu_plus(t))``; ``t`` is reduced modulo the period."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("t must be >= 0")
    scalar = np.ndim(t) == 0
    g = _grid(pspm.spec)
    mu = _mu_grid(pspm)
    r = np.atleast_1d(np.mod(np.asarray(t, dtype=float), pspm.spec.period))
    k = np.clip(np.searchsorted(g.edges, r, side="right") - 1, 0, len(g.half) - 1)
    x = (r - g.mid[k]) / g.half[k]
    d = L.legval(x, g.d_coef[k].T, tensor=False)
    gv = L.legval(x, g.g_coef[k].T, tensor=False)
    m = np.exp(-d) * (mu[k] + gv)
    if scalar:
        return float(m[0]), float(1.0 - m[0])
    return m, 1.0 - m


def mean_transitions(spec: RateSpec) -> float:
    """Stationary mean number of -1 -> +1 transitions per period, ``int_0^T phi_minus mu_minus``."""
    return _pspm(spec).integrate("minus")


def occupation_minus(spec: RateSpec) -> float:
    """Stationary fraction of time spent in state -1."""
    return _pspm(spec).integrate("one") / spec.period


def second_floquet_exponent(spec: RateSpec) -> float:
    """``-(1/T) int_0^T (phi_minus + phi_plus)``: decay rate towards the PSPM."""
    return -integrate_rates(spec, "sum", 0.0, spec.period) / spec.period


# distribution dynamics ----------------------------------------------------


@dataclass(frozen=True)
class DistributionState:
    """``nu(t)``; components may be signed (Floquet basis vectors, deviations)."""

    t: float
    nu_minus: float
    nu_plus: float


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    nu: np.ndarray  # shape (n, 2): columns nu_minus, nu_plus

    def __len__(self):
        return len(self.t)

    def __getitem__(self, i):
        return DistributionState(float(self.t[i]), float(self.nu[i, 0]), float(self.nu[i, 1]))


def _to_sumdiff(v):
    return np.array([v[0] + v[1], v[1] - v[0]])


def _segments(spec, t0, horizon):
    """Split ``[t0, t0 + horizon]`` into within-period pieces ``(offset, start, stop)``."""
    T = spec.period
    k = math.floor(t0 / T)
    phase = t0 - k * T
    t_end = t0 + horizon
    out = []
    base = k * T
    while True:
        stop = min(T, t_end - base)
        if stop > phase:
            out.append((base, phase, stop))
        if base + T >= t_end:
            break
        base += T
        phase = 0.0
    return out


def evolve_distribution(spec: RateSpec, nu0: DistributionState, horizon: float,
                        steps_per_period: int = DEFAULT_STEPS) -> Trajectory:
    """RK4 solution of ``d nu/dt = Q_t nu`` sampled at every step boundary.

    Integration runs in sum/difference coordinates, where the generator is
    triangular: the total mass is carried through unchanged and a
    zero-mass deviation decays multiplicatively without picking up a
    spurious stationary component.
    """
    steps = check_steps(steps_per_period)
    if not horizon > 0:
        raise ValueError("horizon must be > 0")
    v = np.array([nu0.nu_minus, nu0.nu_plus], dtype=float)
    if not np.all(np.isfinite(v)) or not math.isfinite(nu0.t) or nu0.t < 0:
        raise ValueError("initial state must be finite with t >= 0")
    monodromy(spec, 1.0, steps, coords="sumdiff")  # resolution check only
    z = _to_sumdiff(v)
    times, states = [np.array([nu0.t])], [z[None, :]]
    for base, start, stop in _segments(spec, nu0.t, horizon):
        nodes, pref = _sumdiff_prefix(spec, steps, start, stop)
        seg = pref[1:] @ z
        times.append(base + nodes[1:])
        states.append(seg)
        z = seg[-1]
    t = np.concatenate(times)
    sd = np.concatenate(states)
    nu = np.column_stack([0.5 * (sd[:, 0] - sd[:, 1]), 0.5 * (sd[:, 0] + sd[:, 1])])
    return Trajectory(t, nu)


@lru_cache(maxsize=32)
def _sumdiff_prefix(spec, steps, start, stop):
    nodes, mats = period_steps(spec, 1.0, steps, "sumdiff", start, stop)
    return nodes, prefix_products(mats)


def periodic_fixed_point(spec: RateSpec, steps_per_period: int = DEFAULT_STEPS) -> float:
    """``nu_minus(0)`` of the periodic probability solution of the RK4 scheme."""
    mono = monodromy(spec, 1.0, check_steps(steps_per_period), coords="sumdiff").matrix
    delta = mono[1, 0] / (1.0 - mono[1, 1])
    return 0.5 * (1.0 - delta)


def ode_periodic_solution(spec: RateSpec, steps_per_period: int = DEFAULT_STEPS) -> Trajectory:
    """One period of the RK4 trajectory started at its own periodic fixed point."""
    m0 = periodic_fixed_point(spec, steps_per_period)
    return evolve_distribution(spec, DistributionState(0.0, m0, 1.0 - m0), spec.period,
                               steps_per_period)


def periodic_solution_on_grid(spec: RateSpec, n_points: int = 1024,
                              steps_per_period: int = DEFAULT_STEPS) -> Trajectory:
    """The RK4 periodic solution at ``t_j = j T / n_points``, ``j < n_points``.

    ``n_points`` must divide ``steps_per_period`` so every grid time is a step node.
    """
    steps = check_steps(steps_per_period)
    if n_points < 1 or steps % n_points:
        raise ValueError("n_points must divide steps_per_period")
    traj = ode_periodic_solution(spec, steps)
    target = np.arange(n_points) * (spec.period / n_points)
    idx = np.clip(np.searchsorted(traj.t, target), 1, len(traj) - 1)
    idx = np.where(np.abs(traj.t[idx - 1] - target) < np.abs(traj.t[idx] - target), idx - 1, idx)
    if np.max(np.abs(traj.t[idx] - target)) > 1e-9 * spec.period:
        raise RuntimeError("grid time missing from the step nodes")
    return Trajectory(target, traj.nu[idx])


class DecayEstimate(NamedTuple):
    slope: float
    beta: float


def decay_coefficient(spec: RateSpec, nu0: DistributionState) -> float:
    """Coefficient of ``rho(0) = (-1, 1)`` when ``nu0`` (at a period start) is
    written in the basis ``(mu(0), rho(0))``."""
    p = _pspm(spec)
    alpha = nu0.nu_minus + nu0.nu_plus
    return 0.5 * (nu0.nu_plus - nu0.nu_minus) + alpha * (p.i_plus - p.i_minus) / (2 * p.i_sum)


def convergence_rate_estimate(spec: RateSpec, nu0: DistributionState, periods: int = 10,
                              steps_per_period: int = DEFAULT_STEPS) -> DecayEstimate:
    """Least-squares slope of ``log ||nu(kT) - mu(kT)||`` against ``kT``.

    ``nu0`` must be a probability vector given at ``t = 0``.  By linearity the
    deviation ``nu - mu`` solves the same equation, so it is evolved directly
    from ``nu0 - mu(0)``; subtracting two O(1) vectors would lose the signal
    once it falls below rounding level.
    """
    if periods < 5:
        raise ValueError("periods must be >= 5")
    if nu0.t != 0:
        raise ValueError("nu0 must be given at t = 0")
    beta = decay_coefficient(spec, nu0)
    if abs(beta) <= 1e-14 * max(1.0, abs(nu0.nu_minus) + abs(nu0.nu_plus)):
        raise DegenerateInputError("initial distribution lies on the periodic solution (beta = 0)")
    p = _pspm(spec)
    alpha = nu0.nu_minus + nu0.nu_plus
    # nu0 - alpha*mu(0) has zero mass; keep only its difference coordinate so
    # no rounding residue feeds the non-decaying mode
    half_delta = 0.5 * ((nu0.nu_plus - nu0.nu_minus) - alpha * (1.0 - 2.0 * p.mu_minus_zero))
    dev = DistributionState(0.0, -half_delta, half_delta)
    traj = evolve_distribution(spec, dev, periods * spec.period, steps_per_period)
    T = spec.period
    idx = [int(np.argmin(np.abs(traj.t - k * T))) for k in range(periods + 1)]
    tk = traj.t[idx]
    norms = np.hypot(traj.nu[idx, 0], traj.nu[idx, 1])
    if not math.isclose(norms[0], math.sqrt(2) * abs(beta), rel_tol=1e-9):
        warnings.warn("initial deviation norm disagrees with sqrt(2)|beta|", RuntimeWarning)
    slope = np.polyfit(tk, np.log(norms), 1)[0]
    return DecayEstimate(float(slope), float(beta))
