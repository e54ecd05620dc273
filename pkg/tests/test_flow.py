import math
import warnings

import numpy as np
import pytest
from scipy.linalg import expm

from periodic_chain.flow import (ResolutionWarning, check_steps, monodromy, propagate,
                                 step_nodes)
from periodic_chain.rates import RateSpec


def test_constant_monodromy_matches_expm():
    spec = RateSpec.constant(2.0, 1.0, period=1.5)
    for eta in (1.0, 3.0):
        q = np.array([[-2.0, 1.0], [2.0 * eta, -1.0]])
        ref = expm(1.5 * q)
        got = monodromy(spec, eta, 1024).matrix
        np.testing.assert_allclose(got, ref, rtol=1e-12)


def test_half_period_monodromy_is_product_of_exponentials():
    spec = RateSpec.half_period(3.0, 5.0, 2.0)
    q1 = np.array([[-3.0, 5.0], [3.0, -5.0]])
    q2 = np.array([[-5.0, 3.0], [5.0, -3.0]])
    ref = expm(q2) @ expm(q1)
    np.testing.assert_allclose(monodromy(spec, 1.0, 4096).matrix, ref, rtol=1e-12, atol=1e-15)


def test_breakpoints_are_nodes():
    spec = RateSpec.half_period(3.0, 5.0, 2.0)
    nodes = step_nodes(spec, 0.0, 2.0, 64)
    assert 1.0 in nodes
    assert nodes[0] == 0.0 and nodes[-1] == 2.0
    assert np.all(np.diff(nodes) > 0)


def test_stochastic_columns_at_eta_one():
    spec = RateSpec.sin_constant_trace(1.0, 2.0, 2 * math.pi)
    m = monodromy(spec, 1.0, 1024).matrix
    np.testing.assert_allclose(m.sum(axis=0), 1.0, rtol=0, atol=1e-14)
    assert np.all(m > 0)


def test_richardson_warning_when_underresolved():
    spec = RateSpec.constant(200.0, 150.0, period=1.0)
    with pytest.warns(ResolutionWarning):
        monodromy(spec, 1.0, 16)


def test_no_warning_when_resolved():
    spec = RateSpec.constant(2.0, 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        monodromy(spec, 1.0, 1024)


@pytest.mark.parametrize("bad", [0, 15, 16.5, -32])
def test_check_steps_rejects(bad):
    with pytest.raises(ValueError):
        check_steps(bad)


def test_propagate_partial_period():
    spec = RateSpec.constant(2.0, 1.0)
    q = np.array([[-2.0, 1.0], [2.0, -1.0]])
    v0 = np.array([0.25, 0.75])
    np.testing.assert_allclose(propagate(spec, v0, 2.3, 1.0, 1024), expm(2.3 * q) @ v0, rtol=1e-12)
