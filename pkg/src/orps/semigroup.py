"""Dense matrix algebra: T(t) = exp(At), growth bounds, commutators, gap inverse.

All norms are operator 2-norms.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _backend
from .errors import DimensionMismatch, EigenFailure, IllConditioned, NonFinite, NonSquare, SingularGap

EPS = np.finfo(float).eps


def as_matrix(A, name="matrix") -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NonSquare(f"{name} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NonFinite(f"{name} contains NaN or Inf")
    return A


def opnorm(M) -> float:
    """Operator 2-norm (largest singular value); 0 for empty input."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def opnorms(stack) -> np.ndarray:
    """2-norms of an (N, p, q) stack."""
    return _backend.spectral_norm_batch(np.asarray(stack, dtype=float))


def expm(A, t: float = 1.0, tol: float = 1e-12) -> np.ndarray:
    """Matrix exponential ``exp(A t)`` by scaling and squaring with a degree-13 Pade approximant.

    ``tol`` documents the accuracy the caller needs; the approximant is accurate to a
    small multiple of machine precision relative to ``||exp(At)||`` for well-conditioned
    ``A``, which covers every ``tol >= 1e-13``. ``t = 0`` returns the identity exactly.
    """
    A = as_matrix(A, "A")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return np.eye(A.shape[0])
    return _backend.expm_batch(A, np.array([float(t)]))[0]


def expm_many(A, ts) -> np.ndarray:
    """``exp(A t)`` for a batch of times, shape (N, n, n)."""
    A = as_matrix(A, "A")
    ts = np.asarray(ts, dtype=float).reshape(-1)
    out = _backend.expm_batch(A, ts)
    out[ts == 0] = np.eye(A.shape[0])
    return out


def log_norm(A) -> float:
    """Logarithmic 2-norm: the largest eigenvalue of the symmetric part of ``A``."""
    A = as_matrix(A, "A")
    try:
        return float(np.linalg.eigvalsh(0.5 * (A + A.T))[-1])
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc


@dataclass(frozen=True)
class GrowthEstimate:
    """Constants with ``||T(t)|| <= M exp(gamma t)``."""

    M: float
    gamma: float
    method: str = "logarithmic_norm"

    def __post_init__(self):
        if not (self.M >= 1.0 and np.isfinite(self.M) and np.isfinite(self.gamma)):
            raise ValueError(f"invalid growth constants M={self.M}, gamma={self.gamma}")

    def bound(self, t):
        return self.M * np.exp(self.gamma * np.asarray(t, dtype=float))

    def violations(self, A, horizon: float, grid_size: int = 1000, tol: float = 1e-12) -> np.ndarray:
        """Grid times where ``||exp(At)|| > M exp(gamma t)(1 + tol)``."""
        ts = np.linspace(0.0, horizon, grid_size + 1)
        norms = opnorms(expm_many(A, ts))
        return ts[norms > self.bound(ts) * (1.0 + tol)]


def estimate_growth(A, horizon: float, grid_size: int = 1000,
                    method: str = "logarithmic_norm") -> GrowthEstimate:
    """Growth constants ``(M, gamma)`` for ``exp(At)`` valid on ``[0, horizon]``.

    ``logarithmic_norm`` (default) is rigorous for every ``t >= 0``: ``M = 1`` and
    ``gamma`` is the logarithmic 2-norm. ``sampled`` takes ``gamma`` as the spectral
    abscissa and fits ``M`` on the grid; it is tighter but only checked on the grid.
    """
    A = as_matrix(A, "A")
    if horizon <= 0 or grid_size < 1:
        raise ValueError("horizon and grid_size must be positive")
    if method == "logarithmic_norm":
        return GrowthEstimate(1.0, log_norm(A), method)
    if method != "sampled":
        raise ValueError(f"unknown growth method {method!r}")
    try:
        gamma = float(np.max(np.linalg.eigvals(A).real))
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc
    ts = np.linspace(0.0, horizon, grid_size + 1)
    norms = opnorms(expm_many(A, ts))
    M = max(1.0, float(np.max(norms * np.exp(-gamma * ts))))
    return GrowthEstimate(M, gamma, method)


def check_commute(P, Q, tol: float = 1e-10) -> tuple[bool, float]:
    """Scaled commutator residual ``||PQ - QP|| / max(1, ||P|| ||Q||)`` and whether it is <= tol."""
    P = as_matrix(P, "P")
    Q = as_matrix(Q, "Q")
    if P.shape != Q.shape:
        raise DimensionMismatch(f"shapes {P.shape} and {Q.shape} differ")
    residual = opnorm(P @ Q - Q @ P) / max(1.0, opnorm(P) * opnorm(Q))
    return residual <= tol, residual


class GapInverse(NamedTuple):
    inverse: np.ndarray
    cond: float


def monodromy_gap(rho, T_omega, prod_impulses) -> np.ndarray:
    rho = as_matrix(rho, "rho")
    T_omega = as_matrix(T_omega, "T_omega")
    prod_impulses = as_matrix(prod_impulses, "prod_impulses")
    if not (rho.shape == T_omega.shape == prod_impulses.shape):
        raise DimensionMismatch("rho, T(omega) and the impulse product must share a shape")
    return rho - T_omega @ prod_impulses


def invert_monodromy_gap(rho, T_omega, prod_impulses) -> GapInverse:
    """Inverse of ``rho - T(omega) prod(E + B_k)`` with its 2-norm condition number.

    Raises SingularGap when the gap is singular to working precision and warns with
    IllConditioned when the condition number exceeds ``1/sqrt(eps)``.
    """
    gap = monodromy_gap(rho, T_omega, prod_impulses)
    s = np.linalg.svd(gap, compute_uv=False)
    if s[-1] == 0.0 or s[0] / s[-1] > 1.0 / EPS:
        raise SingularGap(f"monodromy gap is singular (smallest singular value {s[-1]:.3e})")
    cond = float(s[0] / s[-1])
    if cond > 1.0 / np.sqrt(EPS):
        warnings.warn(f"monodromy gap condition number {cond:.3e}", IllConditioned, stacklevel=2)
    lu_inv = np.linalg.solve(gap, np.eye(gap.shape[0]))
    return GapInverse(lu_inv, cond)
