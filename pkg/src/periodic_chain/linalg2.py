"""Small 2x2 helpers: scaled ordered products, determinants, stable eigenvalues."""

import math
from typing import NamedTuple

import numpy as np


class ScaledMatrix(NamedTuple):
    """``mantissa * 2**exponent``; keeps long products of 2x2 matrices in range."""

    mantissa: np.ndarray
    exponent: int

    def value(self):
        with np.errstate(over="ignore"):
            return np.ldexp(self.mantissa, self.exponent)

    def log_scale(self):
        return self.exponent * math.log(2.0)


def chain_product(mats) -> ScaledMatrix:
    """Ordered product ``mats[n-1] @ ... @ mats[0]`` by pairwise reduction.

    Runs in extended precision and renormalises every level by a power of two
    so that the mantissa entries stay O(1).
    """
    m = np.array(mats, dtype=np.longdouble)
    if m.ndim != 3 or m.shape[1:] != (2, 2) or len(m) == 0:
        raise ValueError("expected a non-empty (n, 2, 2) stack")
    e = np.zeros(len(m), dtype=np.int64)
    while len(m) > 1:
        carry = None
        if len(m) % 2:
            carry = (m[-1:], e[-1:])
            m, e = m[:-1], e[:-1]
        prod = np.matmul(m[1::2], m[0::2])
        e = e[1::2] + e[0::2]
        scale = np.max(np.abs(prod), axis=(1, 2)).astype(float)
        _, ex = np.frexp(scale)
        prod = np.ldexp(prod, -ex[:, None, None])
        e = e + ex
        if carry is not None:
            prod = np.concatenate([prod, carry[0]])
            e = np.concatenate([e, carry[1]])
        m = prod
    return ScaledMatrix(m[0].astype(float), int(e[0]))


def prefix_products(mats):
    """``P[k] = mats[k-1] @ ... @ mats[0]`` with ``P[0] = I`` (plain float64)."""
    n = len(mats)
    out = np.empty((n + 1, 2, 2))
    out[0] = np.eye(2)
    cur = np.eye(2)
    for k in range(n):
        cur = mats[k] @ cur
        out[k + 1] = cur
    return out


def det2(m):
    m = np.asarray(m)
    return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]


def signed_log_product(values):
    """Return ``(sign, log|prod|)`` of a sequence using compensated summation.

    ``log|prod|`` is ``-inf`` when any factor is zero.
    """
    values = np.asarray(values, dtype=float)
    if np.any(values == 0):
        return 0.0, -math.inf
    sign = -1.0 if np.count_nonzero(values < 0) % 2 else 1.0
    return sign, math.fsum(np.log(np.abs(values)))


def eig2(trace, det):
    """Real eigenvalues ``(larger, smaller)`` of a 2x2 matrix from trace and determinant.

    The root of larger magnitude is taken first and the other follows from
    ``det / root`` so no cancellation occurs when the roots are close to
    ``trace`` and ``0``.
    """
    disc = trace * trace - 4.0 * det
    if disc < 0:
        if disc < -1e-12 * max(trace * trace, abs(det), 1e-300):
            raise ValueError("complex eigenvalues")
        disc = 0.0
    root = math.sqrt(disc)
    big = 0.5 * (trace + math.copysign(root, trace)) if trace != 0 else 0.5 * root
    if big == 0.0:
        return 0.0, 0.0
    other = det / big
    return (big, other) if big >= other else (other, big)
