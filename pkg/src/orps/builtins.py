"""Built-in nonlinearities with known Lipschitz and growth constants.

``scaled_sine`` is compatible with ``rho = c E`` (``c > 0``) by construction: with
``kappa = ln(c)/omega`` it is

    f(t, y, z) = eps e^{kappa t} [ sin(K e^{-kappa t} y) + cos(2 pi t/omega) K2 e^{-kappa t} z + b0 + b1 cos(2 pi t/omega) ]
    g(t, s, y) = cos(2 pi s/omega) (1 + p sin(2 pi t/omega)) W y

so ``f(t + omega, c y, c z) = c f(t, y, z)`` and ``g(t + omega, s, c y) = c g(t, s, y)``.
"""
from __future__ import annotations

import math

import numpy as np

from .flow import VolterraProblem
from .semigroup import opnorm


def scalar_multiple(rho: np.ndarray, tol: float = 1e-14) -> float | None:
    """``c`` if ``rho == c E`` with ``c > 0``, else None."""
    c = float(rho[0, 0])
    if c > 0 and np.allclose(rho, c * np.eye(rho.shape[0]), rtol=0.0, atol=tol * c):
        return c
    return None


def _matrix(params, key, n, default):
    v = params.get(key)
    if v is None:
        return default
    return np.asarray(v, dtype=float).reshape(n, n)


def _vector(params, key, n, default):
    v = params.get(key)
    if v is None:
        return default
    return np.asarray(v, dtype=float).reshape(n)


def scaled_sine(n: int, omega: float, rho: np.ndarray, params: dict) -> VolterraProblem:
    c = scalar_multiple(np.asarray(rho, dtype=float))
    if c is None:
        raise ValueError("scaled_sine needs rho = c * identity with c > 0")
    kappa = math.log(c) / omega
    eps = float(params.get("eps", 0.1))
    K = _matrix(params, "K", n, np.eye(n))
    K2 = _matrix(params, "K2", n, np.zeros((n, n)))
    W = _matrix(params, "W", n, np.zeros((n, n)))
    p = float(params.get("p", 0.0))
    b0 = _vector(params, "b0", n, np.zeros(n))
    b1 = _vector(params, "b1", n, np.ones(n))
    w = 2.0 * math.pi / omega
    has_g = bool(np.any(W))

    def f(t, y, z):
        e = math.exp(-kappa * t)
        ct = math.cos(w * t)
        return (eps / e) * (np.sin(K @ (e * np.asarray(y))) + ct * (K2 @ (e * np.asarray(z))) + b0 + b1 * ct)

    def g(t, s, y):
        s = np.asarray(s, dtype=float)
        scale = (1.0 + p * math.sin(w * t)) * np.cos(w * s)
        return np.multiply.outer(scale, W @ np.asarray(y)) if s.ndim else scale * (W @ np.asarray(y))

    nK, nK2, nW = opnorm(K), opnorm(K2), opnorm(W)
    Lg = (1.0 + abs(p)) * nW
    # ||z|| <= (1 + |p|) ||W|| omega / (2 pi) ||y|| because |int_0^t cos(w s) ds| <= omega / (2 pi)
    z_gain = Lg * omega / (2.0 * math.pi)
    alpha = eps * max(1.0, c) * (float(np.linalg.norm(b0)) + float(np.linalg.norm(b1)))
    beta = eps * (nK + nK2 * z_gain)
    return VolterraProblem(
        f=f, g=g if has_g else None,
        lipschitz_f=eps * max(nK, nK2), lipschitz_g=Lg if has_g else 0.0,
        growth_alpha=alpha, growth_beta=beta, g_vectorized=True, name="scaled_sine",
    )


def zero(n: int, omega: float, rho: np.ndarray, params: dict) -> VolterraProblem:
    return VolterraProblem(f=lambda t, y, z: np.zeros(n), lipschitz_f=0.0, lipschitz_g=0.0,
                           growth_alpha=0.0, growth_beta=0.0, name="zero")


BUILTINS = {"scaled_sine": scaled_sine, "zero": zero}
