"""Discrete-time approximation of the periodically forced chain.

Step ``n`` of a period of ``N`` steps moves -1 -> +1 with probability
``pi_minus[n]`` and +1 -> -1 with probability ``pi_plus[n]``.  When the chain
is built from a :class:`~periodic_chain.rates.RateSpec` the probabilities are
``(T/N) * phi(nT/N)``, and as ``N`` grows every quantity here converges at
rate O(1/N) to its continuous-time counterpart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg2 import ScaledMatrix, chain_product, eig2, signed_log_product
from .rates import RateSpec, eval_rates, rate_bounds


@dataclass(frozen=True, eq=False)
class DiscreteChain:
    pi_minus: np.ndarray
    pi_plus: np.ndarray
    period: float = 1.0
    spec: RateSpec | None = None

    @classmethod
    def from_spec(cls, spec: RateSpec, N: int) -> "DiscreteChain":
        """Sample the rates on the left end of each of ``N`` steps.

        ``N`` must exceed ``2 T (sup phi_minus + sup phi_plus)`` so that every
        ``alpha_n > 1/2``.
        """
        N = int(N)
        sup_m, sup_p, _ = rate_bounds(spec)
        if N <= 2 * spec.period * (sup_m + sup_p):
            raise ValueError(
                f"N={N} too small: need N > 2*T*(sup_minus + sup_plus) = "
                f"{2 * spec.period * (sup_m + sup_p):.6g}")
        t = np.arange(N) * (spec.period / N)
        m, p = eval_rates(spec, t)
        h = spec.period / N
        return cls._make(h * m, h * p, spec.period, spec)

    @classmethod
    def from_probabilities(cls, pi_minus, pi_plus, period=1.0) -> "DiscreteChain":
        """Chain with explicit per-step probabilities (one period's worth)."""
        return cls._make(np.asarray(pi_minus, float), np.asarray(pi_plus, float), period, None)

    @classmethod
    def _make(cls, pm, pp, period, spec):
        pm = np.array(pm, dtype=float).ravel()
        pp = np.array(pp, dtype=float).ravel()
        if pm.shape != pp.shape or pm.size == 0:
            raise ValueError("pi_minus and pi_plus must have the same non-zero length")
        if np.any(pm < 0) or np.any(pm >= 1) or np.any(pp < 0) or np.any(pp >= 1):
            raise ValueError("transition probabilities must lie in [0, 1)")
        if np.all(pm + pp == 0):
            raise ValueError("chain never moves; no unique stationary measure")
        pm.setflags(write=False)
        pp.setflags(write=False)
        return cls(pm, pp, float(period), spec)

    @property
    def N(self):
        return self.pi_minus.size

    @property
    def alpha(self):
        return 1.0 - (self.pi_plus + self.pi_minus)


def _suffix_products(chain: DiscreteChain):
    """``A[k] = prod_{j=k}^{N-1} alpha_j`` for k in [0, N], ``A[N] = 1`` (long double)."""
    alpha = chain.alpha
    if np.all(alpha > 0):
        logs = np.log1p(-(chain.pi_plus + chain.pi_minus)).astype(np.longdouble)
        suffix = np.concatenate([np.cumsum(logs[::-1])[::-1], [np.longdouble(0)]])
        return np.exp(suffix)
    prods = np.cumprod(alpha[::-1].astype(np.longdouble))[::-1]
    return np.concatenate([prods, [np.longdouble(1)]])


def survival_product(chain: DiscreteChain, k: int) -> float:
    """``A_k``: probability-free product of ``alpha_j`` over ``j = k..N-1`` (1 for k >= N)."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if k >= chain.N:
        return 1.0
    return float(_suffix_products(chain)[k])


def stationary_discrete(chain: DiscreteChain) -> np.ndarray:
    """Periodic stationary probabilities of state -1 at steps ``0..N-1``."""
    A = _suffix_products(chain)
    pp = chain.pi_plus.astype(np.longdouble)
    weighted = pp * A[1:]
    if np.all(chain.alpha > 0):
        one_minus_a0 = np.longdouble(-math.expm1(float(np.log(A[0]))))
    else:
        one_minus_a0 = 1 - A[0]
    nu0 = math.fsum(weighted.astype(float)) / one_minus_a0
    if np.any(A[:-1] == 0):
        # a zero alpha breaks the closed form; run nu_{n+1} = alpha_n nu_n + pi_plus_n
        nu = np.empty(chain.N, dtype=np.longdouble)
        nu[0] = nu0
        alpha = chain.alpha.astype(np.longdouble)
        for n in range(chain.N - 1):
            nu[n + 1] = alpha[n] * nu[n] + pp[n]
        return nu.astype(float)
    partial = np.concatenate([[np.longdouble(0)], np.cumsum(weighted[:-1])])
    nu = (A[0] * nu0 + partial) / A[:-1]
    return nu.astype(float)


def mean_transitions_discrete(chain: DiscreteChain) -> float:
    """Stationary mean number of -1 -> +1 moves per period."""
    return math.fsum(chain.pi_minus * stationary_discrete(chain))


@dataclass(frozen=True)
class DiscreteMonodromy:
    """Product of the one-step generating-function matrices over a period."""

    eta: float
    scaled: ScaledMatrix
    lambda1: float
    lambda2: float
    log_lambda1: float
    det_sign: float
    log_abs_det: float

    @property
    def matrix(self):
        return self.scaled.value()

    @property
    def det_product(self):
        return self.det_sign * math.exp(self.log_abs_det)


def step_matrices(chain: DiscreteChain, eta: float):
    pm, pp = chain.pi_minus, chain.pi_plus
    m = np.empty((chain.N, 2, 2))
    m[:, 0, 0] = 1.0 - pm
    m[:, 0, 1] = pp
    m[:, 1, 0] = eta * pm
    m[:, 1, 1] = 1.0 - pp
    return m


def discrete_monodromy(chain: DiscreteChain, eta: float) -> DiscreteMonodromy:
    """``M_{N-1} ... M_0`` with its eigenvalues.

    The determinant comes from the per-step identity
    ``det M_n = alpha_n + (1 - eta) pi_plus_n pi_minus_n``; the smaller
    eigenvalue is ``det / lambda1``.
    """
    if not eta > 0:
        raise ValueError("eta must be > 0")
    pm, pp = chain.pi_minus, chain.pi_plus
    scaled = chain_product(step_matrices(chain, eta))
    sign, log_det = signed_log_product(chain.alpha + (1.0 - eta) * pp * pm)
    shift = scaled.log_scale()
    mant = scaled.mantissa
    det_m = sign * math.exp(log_det - 2 * shift) if sign else 0.0
    l1, l2 = eig2(float(mant[0, 0] + mant[1, 1]), det_m)
    with np.errstate(over="ignore"):
        lam1 = float(np.ldexp(l1, scaled.exponent))
        lam2 = float(np.ldexp(l2, scaled.exponent))
    log_l1 = math.log(l1) + shift if l1 > 0 else math.nan
    return DiscreteMonodromy(float(eta), scaled, lam1, lam2, log_l1, sign, log_det)
