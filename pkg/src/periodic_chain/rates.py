"""Periodic transition rates of the two-state chain.

A :class:`RateSpec` describes the exit rate ``phi_minus`` of state -1 and
``phi_plus`` of state +1 as T-periodic functions of time.  Every other module
in the package consumes rates through :func:`eval_rates`,
:func:`integrate_rates` and :func:`rate_bounds`.

Piecewise kinds are right-continuous at their breakpoints; the left limit is
available through ``side="left"`` for integrators that need it at the end of
a step.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .quadrature import piecewise_integral

KINDS = ("constant", "half_period", "arrhenius_half", "sin_constant_trace", "tabulated")
SELECTORS = ("minus", "plus", "sum")


class SpecError(ValueError):
    """Raised when a rate specification violates its invariants."""


class RateBounds(NamedTuple):
    sup_minus: float
    sup_plus: float
    breakpoints: tuple


def _positive(name, value):
    value = float(value)
    if not (math.isfinite(value) and value > 0):
        raise SpecError(f"{name} must be finite and > 0, got {value!r}")
    return value


@dataclass(frozen=True)
class RateSpec:
    """Immutable T-periodic pair of rate functions.

    Build instances with the classmethod constructors (``RateSpec.constant``
    and friends) rather than directly; they validate positivity.
    """

    kind: str
    period: float
    params: tuple
    _levels: tuple = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpecError(f"unknown rate kind {self.kind!r}")
        _positive("period", self.period)
        p = dict(self.params)
        if self.kind == "constant":
            levels = (_positive("phi_minus", p["phi_minus"]), float(p["phi_plus"]))
            if not (math.isfinite(levels[1]) and levels[1] >= 0):
                raise SpecError("phi_plus must be finite and >= 0")
        elif self.kind == "half_period":
            levels = (_positive("phi0", p["phi0"]), _positive("phi1", p["phi1"]))
        elif self.kind == "arrhenius_half":
            for name in ("p", "q", "eps"):
                _positive(name, p[name])
            if not p["v"] < p["V"]:
                raise SpecError("arrhenius_half requires v < V")
            phi0 = math.exp(math.log(p["p"]) - p["V"] / p["eps"])
            phi1 = math.exp(math.log(p["q"]) - p["v"] / p["eps"])
            if phi0 <= 0 or phi1 <= 0:
                raise SpecError("arrhenius rates underflow to zero; use resonance.HalfPeriodParams")
            levels = (phi0, phi1)
        elif self.kind == "sin_constant_trace":
            _positive("eps", p["eps"])
            _positive("omega", p["omega"])
            if not p["a"] > 1:
                raise SpecError("sin_constant_trace requires a > 1")
            if not math.isclose(self.period, 2 * math.pi / p["omega"], rel_tol=1e-12):
                raise SpecError("sin_constant_trace period must equal 2*pi/omega")
            levels = ()
        else:
            minus = np.asarray(p["phi_minus"], dtype=float)
            plus = np.asarray(p["phi_plus"], dtype=float)
            if minus.ndim != 1 or minus.shape != plus.shape or minus.size < 2:
                raise SpecError("tabulated samples must be two equal 1-d grids of length >= 2")
            if not (np.all(np.isfinite(minus)) and np.all(np.isfinite(plus))):
                raise SpecError("tabulated samples must be finite")
            if np.any(minus <= 0) or np.any(plus < 0):
                raise SpecError("tabulated phi_minus must be > 0 and phi_plus >= 0")
            minus.setflags(write=False)
            plus.setflags(write=False)
            levels = (minus, plus)
        object.__setattr__(self, "_levels", levels)

    # constructors -------------------------------------------------------

    @classmethod
    def constant(cls, phi_minus, phi_plus, period=1.0):
        return cls("constant", float(period),
                   (("phi_minus", float(phi_minus)), ("phi_plus", float(phi_plus))))

    @classmethod
    def half_period(cls, phi0, phi1, period):
        """``phi_minus = phi0`` on the first half period and ``phi1`` on the second;
        ``phi_plus = phi0 + phi1 - phi_minus``."""
        return cls("half_period", float(period), (("phi0", float(phi0)), ("phi1", float(phi1))))

    @classmethod
    def arrhenius_half(cls, p, q, V, v, eps, period):
        """Half-period rates with levels ``p*exp(-V/eps)`` and ``q*exp(-v/eps)``."""
        params = tuple((k, float(x)) for k, x in
                       (("p", p), ("q", q), ("V", V), ("v", v), ("eps", eps)))
        return cls("arrhenius_half", float(period), params)

    @classmethod
    def sin_constant_trace(cls, eps, a, omega):
        """``phi_minus = eps*(a + cos(omega t))``, ``phi_plus = eps*(a - cos(omega t))``."""
        params = (("a", float(a)), ("eps", float(eps)), ("omega", float(omega)))
        return cls("sin_constant_trace", 2 * math.pi / float(omega), params)

    @classmethod
    def tabulated(cls, phi_minus, phi_plus, period):
        """Uniform samples over ``[0, period)``, periodically linearly interpolated."""
        return cls("tabulated", float(period),
                   (("phi_minus", tuple(float(x) for x in phi_minus)),
                    ("phi_plus", tuple(float(x) for x in phi_plus))))

    # helpers --------------------------------------------------------------

    def param(self, name):
        return dict(self.params)[name]

    @property
    def half_levels(self):
        """``(phi0, phi1)`` for the half-period kinds."""
        if self.kind not in ("half_period", "arrhenius_half"):
            raise AttributeError(f"{self.kind} has no half-period levels")
        return self._levels

    def to_dict(self):
        d = {"kind": self.kind}
        for k, x in self.params:
            d[k] = list(x) if isinstance(x, tuple) else x
        if self.kind != "sin_constant_trace":
            d["T"] = self.period
        return d


# evaluation -------------------------------------------------------------


def _reduce(spec, t, side):
    r = np.mod(np.asarray(t, dtype=float), spec.period)
    if side == "left":
        r = np.where(r == 0.0, spec.period, r)
    elif side != "right":
        raise ValueError("side must be 'right' or 'left'")
    return r


def eval_rates(spec: RateSpec, t, side="right"):
    """Return ``(phi_minus(t), phi_plus(t))``.

    ``t`` may be a scalar or an array.  Time is reduced modulo the period
    before evaluation, so results repeat exactly whenever the reduced times
    coincide.  ``side="left"`` returns left limits at breakpoints.
    """
    scalar = np.ndim(t) == 0
    r = _reduce(spec, t, side)
    kind = spec.kind
    if kind == "constant":
        m = np.full_like(r, spec._levels[0])
        p = np.full_like(r, spec._levels[1])
    elif kind in ("half_period", "arrhenius_half"):
        phi0, phi1 = spec._levels
        half = 0.5 * spec.period
        first = r <= half if side == "left" else r < half
        m = np.where(first, phi0, phi1)
        p = np.where(first, phi1, phi0)
    elif kind == "sin_constant_trace":
        eps, a, omega = spec.param("eps"), spec.param("a"), spec.param("omega")
        c = np.cos(omega * r)
        m = eps * (a + c)
        p = eps * (a - c)
    else:
        minus, plus = spec._levels
        n = minus.size
        x = r / spec.period * n
        j = np.minimum(np.floor(x).astype(int), n - 1)
        frac = x - j
        k = (j + 1) % n
        m = minus[j] * (1 - frac) + minus[k] * frac
        p = plus[j] * (1 - frac) + plus[k] * frac
    if scalar:
        return float(m), float(p)
    return m, p


def _selected(spec, selector, side="right"):
    if selector not in SELECTORS:
        raise ValueError(f"selector must be one of {SELECTORS}")

    def f(t):
        m, p = eval_rates(spec, t, side)
        if selector == "minus":
            return m
        if selector == "plus":
            return p
        return m + p

    return f


def smooth_nodes(spec: RateSpec):
    """Times in ``[0, T)`` where the rates are not smooth (jumps or kinks).

    Always contains 0 so that a period is cut at its start.
    """
    if spec.kind in ("half_period", "arrhenius_half"):
        return (0.0, 0.5 * spec.period)
    if spec.kind == "tabulated":
        n = spec._levels[0].size
        return tuple(j * spec.period / n for j in range(n))
    return (0.0,)


def rate_bounds(spec: RateSpec) -> RateBounds:
    """Suprema of both rates over a period and the list of discontinuities."""
    kind = spec.kind
    if kind == "constant":
        return RateBounds(spec._levels[0], spec._levels[1], ())
    if kind in ("half_period", "arrhenius_half"):
        top = max(spec._levels)
        return RateBounds(top, top, (0.0, 0.5 * spec.period))
    if kind == "sin_constant_trace":
        top = spec.param("eps") * (spec.param("a") + 1)
        return RateBounds(top, top, ())
    minus, plus = spec._levels
    return RateBounds(float(minus.max()), float(plus.max()), ())


def _within_period(spec, selector, a, b):
    return piecewise_integral(_selected(spec, selector), a, b, smooth_nodes(spec))


def integrate_rates(spec: RateSpec, selector: str, s: float, e: float) -> float:
    """Integral of the selected rate (``minus``, ``plus`` or ``sum``) over ``[s, e]``."""
    if not 0 <= s <= e:
        raise ValueError("need 0 <= s <= e")
    T = spec.period
    ns, ne = math.floor(s / T), math.floor(e / T)
    rs, re_ = s - ns * T, e - ne * T
    if ns == ne:
        return _within_period(spec, selector, rs, re_)
    total = _within_period(spec, selector, rs, T)
    if ne - ns > 1:
        total += (ne - ns - 1) * _within_period(spec, selector, 0.0, T)
    return total + _within_period(spec, selector, 0.0, re_)


# JSON documents -----------------------------------------------------------


def spec_from_dict(doc) -> RateSpec:
    """Build a :class:`RateSpec` from a JSON-style mapping."""
    if not isinstance(doc, dict) or "kind" not in doc:
        raise SpecError("rate spec must be an object with a 'kind' field")
    kind = doc["kind"]
    allowed = {
        "constant": {"phi_minus", "phi_plus", "T"},
        "half_period": {"phi0", "phi1", "T"},
        "arrhenius_half": {"p", "q", "V", "v", "eps", "T"},
        "sin_constant_trace": {"eps", "a", "omega", "T"},
        "tabulated": {"phi_minus", "phi_plus", "T"},
    }
    if kind not in allowed:
        raise SpecError(f"unknown rate kind {kind!r}")
    extra = set(doc) - allowed[kind] - {"kind"}
    if extra:
        raise SpecError(f"unexpected fields for {kind}: {sorted(extra)}")
    required = allowed[kind] - ({"T"} if kind in ("constant", "sin_constant_trace") else set())
    missing = required - set(doc)
    if missing:
        raise SpecError(f"missing fields for {kind}: {sorted(missing)}")
    try:
        if kind == "constant":
            return RateSpec.constant(doc["phi_minus"], doc["phi_plus"], doc.get("T", 1.0))
        if kind == "half_period":
            return RateSpec.half_period(doc["phi0"], doc["phi1"], doc["T"])
        if kind == "arrhenius_half":
            return RateSpec.arrhenius_half(doc["p"], doc["q"], doc["V"], doc["v"],
                                           doc["eps"], doc["T"])
        if kind == "sin_constant_trace":
            spec = RateSpec.sin_constant_trace(doc["eps"], doc["a"], doc["omega"])
            if "T" in doc and not math.isclose(float(doc["T"]), spec.period, rel_tol=1e-9):
                raise SpecError("T must equal 2*pi/omega for sin_constant_trace")
            return spec
        return RateSpec.tabulated(doc["phi_minus"], doc["phi_plus"], doc["T"])
    except (TypeError, KeyError) as exc:
        raise SpecError(f"malformed {kind} spec: {exc}") from exc


def load_spec(path) -> RateSpec:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SpecError(f"malformed JSON in {path}: {exc.msg}") from exc
    return spec_from_dict(doc)
