import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad, solve_ivp

from periodic_chain.pspm import (DegenerateInputError, DistributionState, Pspm,
                                 convergence_rate_estimate, evolve_distribution, mean_transitions,
                                 occupation_minus, periodic_fixed_point, pspm_at,
                                 second_floquet_exponent, tail_weighted_integral)
from periodic_chain.rates import RateSpec, eval_rates, integrate_rates

SIN = RateSpec.sin_constant_trace(1.0, 2.0, 2 * math.pi)
HALF = RateSpec.half_period(3.0, 5.0, 2.0)
TAB = RateSpec.tabulated([1.0, 2.0, 0.5, 3.0], [0.2, 1.0, 2.0, 0.0], 1.5)


def test_tail_integral_examples():
    spec = RateSpec.constant(1.0, 1.0)
    assert tail_weighted_integral(spec, "sum") == pytest.approx(1 - math.exp(-2), rel=1e-14)
    assert tail_weighted_integral(spec, "plus") == pytest.approx(0.5 * (1 - math.exp(-2)), rel=1e-14)


@pytest.mark.parametrize("spec", [SIN, HALF, TAB], ids=lambda s: s.kind)
def test_tail_integral_against_quad(spec):
    T = spec.period
    brk = [T / 2] if spec.kind == "half_period" else list(np.arange(1, 4) * T / 4) if spec.kind == "tabulated" else []

    def tail(t):
        return math.exp(-integrate_rates(spec, "sum", t, T))
    ref = quad(lambda t: eval_rates(spec, t)[1] * tail(t), 0, T, points=brk or None, epsabs=0,
               epsrel=1e-12, limit=200)[0]
    assert tail_weighted_integral(spec, "plus") == pytest.approx(ref, rel=1e-10)


@given(a=st.floats(0.1, 5), b=st.floats(0.0, 5), c=st.floats(0.1, 5), T=st.floats(0.1, 4))
@settings(max_examples=30, deadline=None)
def test_sum_tail_integral_identity(a, b, c, T):
    # I(phi_minus + phi_plus) = 1 - exp(-int_0^T (phi_minus + phi_plus))
    spec = RateSpec.tabulated([a, c, a + b], [b, a, c], T)
    total = integrate_rates(spec, "sum", 0.0, T)
    assert tail_weighted_integral(spec, "sum") == pytest.approx(-math.expm1(-total), rel=1e-12, abs=1e-15)


def test_constant_pspm():
    p = Pspm.from_spec(RateSpec.constant(2.0, 1.0))
    m, q = pspm_at(p, np.linspace(0, 3, 11))
    np.testing.assert_allclose(m, 1 / 3, rtol=1e-14)
    np.testing.assert_allclose(m + q, 1.0, rtol=0, atol=1e-15)


def test_sin_pspm_matches_formula():
    # constant trace: mu_minus solves a scalar linear ODE with closed-form periodic solution
    p = Pspm.from_spec(SIN)
    t = np.linspace(0, 1, 101)
    ref = 0.5 - (2 * 2 * np.cos(2 * np.pi * t) + 2 * np.pi * np.sin(2 * np.pi * t)) / (16 + 4 * np.pi ** 2)
    np.testing.assert_allclose(pspm_at(p, t)[0], ref, rtol=0, atol=1e-13)


def test_pspm_periodic_fixed_point_of_ivp():
    p = Pspm.from_spec(TAB)
    m0 = p.mu_minus_zero

    def rhs(t, y):
        m, q = eval_rates(TAB, t)
        return [-m * y[0] + q * (1 - y[0])]
    sol = solve_ivp(rhs, (0, TAB.period), [m0], rtol=1e-12, atol=1e-14, max_step=0.01,
                    dense_output=True)
    assert sol.y[0, -1] == pytest.approx(m0, abs=1e-10)
    t = np.linspace(0, TAB.period, 40)
    np.testing.assert_allclose(pspm_at(p, t)[0], sol.sol(t)[0], atol=1e-9)


def test_pspm_positivity_on_fine_grid():
    for spec in (SIN, HALF, TAB, RateSpec.arrhenius_half(1, 1, 2, 1, 0.1, 1e5)):
        m, q = pspm_at(Pspm.from_spec(spec), np.linspace(0, spec.period, 10_000, endpoint=False))
        assert np.all(m > 0) and np.all(q > 0)


def test_pspm_rejects_negative_time():
    with pytest.raises(ValueError):
        pspm_at(Pspm.from_spec(SIN), -0.1)


def test_second_exponent_examples():
    assert second_floquet_exponent(RateSpec.constant(1.0, 1.0)) == pytest.approx(-2.0, rel=1e-14)
    assert second_floquet_exponent(HALF) == pytest.approx(-8.0, rel=1e-14)
    assert second_floquet_exponent(SIN) == pytest.approx(-4.0, rel=1e-13)


def test_mean_and_occupation_constant():
    spec = RateSpec.constant(2.0, 1.0, period=3.0)
    assert mean_transitions(spec) == pytest.approx(2.0 * 3.0 / 3.0, rel=1e-13)
    assert occupation_minus(spec) == pytest.approx(1 / 3, rel=1e-13)


def test_evolve_constant_relaxation():
    spec = RateSpec.constant(1.0, 1.0)
    traj = evolve_distribution(spec, DistributionState(0.0, 1.0, 0.0), 3.0, 1024)
    np.testing.assert_allclose(traj.nu[:, 0], 0.5 + 0.5 * np.exp(-2 * traj.t), rtol=1e-12)
    np.testing.assert_allclose(traj.nu.sum(axis=1), 1.0, rtol=0, atol=1e-12)


def test_evolve_deviation_is_pure_exponential():
    # rho(0) = (-1, 1) decays as exp(-int S) without any stationary component
    traj = evolve_distribution(SIN, DistributionState(0.0, -1.0, 1.0), 5.0, 1024)
    ref = np.exp(-np.array([integrate_rates(SIN, "sum", 0.0, t) for t in traj.t[::256]]))
    np.testing.assert_allclose(traj.nu[::256, 1], ref, rtol=1e-10)
    np.testing.assert_allclose(traj.nu.sum(axis=1), 0.0, atol=1e-15)


def test_evolve_from_later_start_time():
    traj = evolve_distribution(HALF, DistributionState(1.3, 0.2, 0.8), 2.0, 1024)
    assert traj.t[0] == 1.3 and traj.t[-1] == pytest.approx(3.3, rel=1e-15)
    np.testing.assert_allclose(traj.nu.sum(axis=1), 1.0, atol=1e-12)


@pytest.mark.parametrize("spec", [SIN, HALF, TAB], ids=lambda s: s.kind)
def test_rk4_fixed_point_agrees(spec):
    assert periodic_fixed_point(spec, 4096) == pytest.approx(Pspm.from_spec(spec).mu_minus_zero, abs=1e-10)


def test_contraction_factor():
    mu0 = Pspm.from_spec(TAB).mu_minus_zero
    nu0 = DistributionState(0.0, 0.9, 0.1)
    traj = evolve_distribution(TAB, nu0, TAB.period, 1024)
    ratio = (traj.nu[-1, 0] - mu0) / (0.9 - mu0)
    assert ratio == pytest.approx(math.exp(second_floquet_exponent(TAB) * TAB.period), rel=1e-8)


def test_convergence_slopes():
    est = convergence_rate_estimate(RateSpec.constant(2.0, 1.0), DistributionState(0.0, 1.0, 0.0))
    assert est.slope == pytest.approx(-3.0, rel=1e-8)
    est = convergence_rate_estimate(HALF, DistributionState(0.0, 0.0, 1.0))
    assert est.slope == pytest.approx(-8.0, rel=1e-8)


def test_degenerate_start_rejected():
    m0 = Pspm.from_spec(SIN).mu_minus_zero
    with pytest.raises(DegenerateInputError):
        convergence_rate_estimate(SIN, DistributionState(0.0, m0, 1.0 - m0))
