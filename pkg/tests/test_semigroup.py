import warnings

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from orps import _pykernels
from orps.errors import IllConditioned, NonFinite, NonSquare, SingularGap
from orps.semigroup import (GrowthEstimate, check_commute, estimate_growth, expm, expm_many,
                            invert_monodromy_gap, log_norm, opnorm)

matrices = st.integers(1, 5).flatmap(
    lambda n: st.lists(st.floats(-3, 3), min_size=n * n, max_size=n * n).map(lambda v: np.array(v).reshape(n, n)))


def test_expm_scalar_and_zero_time():
    assert expm([[0.0]], 3.0)[0, 0] == 1.0
    assert np.array_equal(expm(np.ones((3, 3)), 0.0), np.eye(3))
    assert expm([[np.log(2.0)]], 1.0)[0, 0] == pytest.approx(2.0, rel=1e-15)


def test_expm_nilpotent_closed_form():
    N = np.array([[0.0, 1.0], [0.0, 0.0]])
    np.testing.assert_allclose(expm(N, 2.5), [[1.0, 2.5], [0.0, 1.0]], atol=1e-15)


def test_expm_rotation():
    J = np.array([[0.0, -1.0], [1.0, 0.0]])
    t = 0.7
    np.testing.assert_allclose(expm(J, t), [[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]], atol=1e-15)


@settings(max_examples=60, deadline=None)
@given(matrices, st.floats(0, 2))
def test_expm_matches_scipy(A, t):
    ref = scipy.linalg.expm(A * t)
    np.testing.assert_allclose(expm(A, t), ref, rtol=1e-11, atol=1e-11 * max(1.0, np.abs(ref).max()))


@settings(max_examples=60, deadline=None)
@given(matrices, st.floats(0, 1), st.floats(0, 1))
def test_semigroup_law(A, s, t):
    lhs = expm(A, s + t)
    rhs = expm(A, s) @ expm(A, t)
    assert np.abs(lhs - rhs).max() <= 1e-11 * max(1.0, np.abs(lhs).max())


def test_expm_rejects_bad_input():
    with pytest.raises(NonSquare):
        expm(np.ones((2, 3)))
    with pytest.raises(NonFinite):
        expm([[np.nan]])
    with pytest.raises(ValueError):
        expm([[1.0]], -1.0)


def test_expm_many_matches_single(rng):
    A = rng.standard_normal((4, 4))
    ts = np.array([0.0, 0.3, 1.1])
    many = expm_many(A, ts)
    for k, t in enumerate(ts):
        np.testing.assert_allclose(many[k], expm(A, t), rtol=1e-14, atol=1e-14)


def test_log_norm_growth_is_rigorous(rng):
    for _ in range(20):
        A = rng.standard_normal((3, 3))
        g = estimate_growth(A, 2.0)
        assert g.M == 1.0 and g.gamma == pytest.approx(log_norm(A))
        assert g.violations(A, 2.0, 200).size == 0


def test_sampled_growth_covers_grid(rng):
    A = np.array([[-1.0, 10.0], [0.0, -1.0]])
    g = estimate_growth(A, 3.0, 300, method="sampled")
    assert g.gamma == pytest.approx(-1.0)
    assert g.M > 1.0
    assert g.violations(A, 3.0, 300, tol=1e-12).size == 0


def test_growth_estimate_validation():
    with pytest.raises(ValueError):
        GrowthEstimate(0.5, 0.0)
    with pytest.raises(ValueError):
        estimate_growth([[1.0]], 1.0, method="nope")


def test_check_commute():
    ok, res = check_commute(np.diag([1.0, 2.0]), np.diag([3.0, 4.0]))
    assert ok and res == 0.0
    ok, res = check_commute([[0.0, 1.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]])
    assert not ok and res == pytest.approx(1.0)


def test_gap_inverse_scalar():
    g = invert_monodromy_gap([[3.0]], [[1.0]], [[2.0]])
    assert g.inverse[0, 0] == pytest.approx(1.0)
    assert g.cond == pytest.approx(1.0)


def test_gap_singular_and_ill_conditioned():
    with pytest.raises(SingularGap):
        invert_monodromy_gap([[1.0]], [[1.0]], [[1.0]])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        invert_monodromy_gap(np.diag([1.0, 1.0 + 1e-10]), np.eye(2), np.diag([0.0, 1.0]))
    assert any(issubclass(w.category, IllConditioned) for w in caught)


def test_opnorm_is_spectral(rng):
    M = rng.standard_normal((4, 3))
    assert opnorm(M) == pytest.approx(np.linalg.svd(M, compute_uv=False)[0], rel=1e-14)
    assert opnorm(np.empty((0, 0))) == 0.0


def test_python_fallback_expm_matches_scipy(rng):
    A = rng.standard_normal((5, 5))
    ts = np.array([0.0, 0.5, 3.0])
    out = _pykernels.expm_batch(A, ts)
    for k, t in enumerate(ts):
        ref = scipy.linalg.expm(A * t)
        np.testing.assert_allclose(out[k], ref, rtol=1e-11, atol=1e-11 * np.abs(ref).max())
