import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orps.errors import QuadratureFailure
from orps.quadrature import QuadratureConfig, composite_rule, gauss_legendre, integrate, lagrange_matrix


@pytest.mark.parametrize("q", [2, 5, 8])
def test_gauss_legendre_exact_degree(q):
    x, w = gauss_legendre(q)
    for k in range(2 * q):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        assert w @ x ** k == pytest.approx(exact, abs=1e-14)


def test_composite_rule_respects_breakpoints():
    x, w = composite_rule(0.0, 1.0, [0.3, 0.7], panels=2, q=4)
    assert w.sum() == pytest.approx(1.0, rel=1e-15)
    assert not np.any(np.isclose(x, 0.3)) and not np.any(np.isclose(x, 0.7))
    assert composite_rule(1.0, 1.0)[0].size == 0


def test_integrate_kink_exact():
    # |x - 0.3| is piecewise linear, exact once the kink is a breakpoint
    val = integrate(lambda x: np.abs(x - 0.3), 0.0, 1.0, [0.3])
    assert val == pytest.approx(0.3 ** 2 / 2 + 0.7 ** 2 / 2, rel=1e-15)


def test_integrate_vector_valued():
    val = integrate(lambda x: np.stack([np.sin(x), np.exp(x)], axis=1), 0.0, 2.0)
    np.testing.assert_allclose(val, [1 - math.cos(2.0), math.exp(2.0) - 1], rtol=1e-13)


def test_integrate_failure():
    with pytest.raises(QuadratureFailure):
        integrate(lambda x: 1.0 / np.sqrt(np.abs(x - 0.5)), 0.0, 1.0, cfg=QuadratureConfig(max_levels=2, tol=1e-15))


def test_empty_interval_zero():
    assert integrate(lambda x: np.ones((len(x), 2)), 1.0, 1.0).shape == (2,)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=1, max_size=6), st.floats(-1, 1))
def test_lagrange_reproduces_polynomials(coef, t):
    x = np.cos(np.pi * (np.arange(7) + 0.5) / 7)
    p = np.polynomial.Polynomial(coef)
    got = lagrange_matrix(x, np.array([t])) @ p(x)
    assert got[0] == pytest.approx(p(t), abs=1e-11)


def test_lagrange_at_nodes_is_identity():
    x = np.array([0.0, 0.5, 1.0])
    np.testing.assert_array_equal(lagrange_matrix(x, x), np.eye(3))
