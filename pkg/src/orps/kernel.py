"""Green-type kernel of the periodic boundary problem and its closed-form bounds.

For ``0 <= t <= omega`` and ``0 < tau < omega`` the kernel is evaluated as

    H(t, tau) = T(t) P(0, t) G T(omega - tau) P(tau, omega) + [tau < t] T(t - tau) P(tau, t)

with ``G`` the inverse of ``rho - T(omega) P(0, omega)`` and ``P`` the ordered window
products. Under commutation of ``A`` with the jump matrices this is the usual two-branch
kernel; the unfactored form stays exact when ``t`` itself is an impulse time.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import CommutationViolation
from .quadrature import QuadratureConfig, composite_rule, integrate
from .semigroup import GrowthEstimate, check_commute, estimate_growth, expm, expm_many, opnorm, opnorms
from .system import SystemSpec

_GAMMA_ZERO = 0.0


@dataclass(frozen=True)
class KernelEvaluation:
    t: float
    tau: float
    branch: str        # "before" (tau < t) or "after" (t <= tau)
    variant: str       # "general" or "commuting"
    value: np.ndarray


def _check_args(sys: SystemSpec, t: float, tau: float):
    if not (0.0 <= t <= sys.omega):
        raise ValueError(f"t={t} outside [0, omega]")
    if not (0.0 <= tau <= sys.omega):
        raise ValueError(f"tau={tau} outside [0, omega]")


def kernel_matrix(sys: SystemSpec, t: float, taus, variant: str = "general") -> np.ndarray:
    """``H(t, tau_j)`` for an array of ``tau``, shape (N, n, n)."""
    taus = np.asarray(taus, dtype=float).reshape(-1)
    n, omega, A = sys.n, sys.omega, sys.A
    G = sys.gap_inverse
    out = np.empty((len(taus), n, n))
    if len(taus) == 0:
        return out
    before = taus < t
    if variant == "general":
        left = expm(A, t) @ sys.window(0.0, t) @ G
        right = expm_many(A, omega - taus)
        right = right @ sys.windows_to(taus, omega)
        out[:] = left[None] @ right
        if before.any():
            tb = taus[before]
            out[before] += expm_many(A, t - tb) @ sys.windows_to(tb, t)
        return out
    if variant == "commuting":
        if before.any():
            tb = taus[before]
            inner = expm_many(A, t - tb) @ sys.windows_to(tb, t)
            out[before] = (sys.rho @ G)[None] @ inner
        after = ~before
        if after.any():
            ta = taus[after]
            P0t = sys.window(0.0, t)
            prods = P0t[None] @ sys.windows_to(ta, omega)
            out[after] = expm_many(A, t + omega - ta) @ prods @ G[None]
        return out
    raise ValueError(f"unknown kernel variant {variant!r}")


def kernel_H(sys: SystemSpec, t: float, tau: float) -> KernelEvaluation:
    """General kernel value at one point."""
    _check_args(sys, t, tau)
    value = kernel_matrix(sys, t, [tau], "general")[0]
    return KernelEvaluation(float(t), float(tau), "before" if tau < t else "after", "general", value)


def commutation_residual(sys: SystemSpec) -> float:
    """Scaled commutator of the gap inverse with ``A`` (equivalently with every ``T(t)``)."""
    return check_commute(sys.gap_inverse, sys.A, 1.0)[1]


def kernel_H_commuting(sys: SystemSpec, t: float, tau: float, tol: float = 1e-8) -> KernelEvaluation:
    """Simplified kernel, valid when the gap inverse commutes with the semigroup."""
    _check_args(sys, t, tau)
    res = commutation_residual(sys)
    if res > tol:
        raise CommutationViolation(f"gap inverse does not commute with T(t) (residual {res:.3e})")
    value = kernel_matrix(sys, t, [tau], "commuting")[0]
    return KernelEvaluation(float(t), float(tau), "before" if tau < t else "after", "commuting", value)


# --- bounds -------------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundInputs:
    M: float
    gamma: float
    omega: float
    norm_P: float        # ||prod (E + B_k)||
    norm_P2: float       # ||(prod (E + B_k))^2||
    norm_G: float        # ||gap^{-1}||
    norm_rho: float
    taus: tuple[float, ...]
    d_norms: tuple[float, ...]


@dataclass(frozen=True)
class BoundReport:
    C1: float
    C2: float
    variant: str
    C1_branch: str       # "pos" / "nonpos"
    C2_branch: str       # "nonzero" / "zero"
    inputs: BoundInputs
    C1_tight: float | None = None

    def recompute(self) -> tuple[float, float]:
        fn1, fn2 = _FORMULAS[self.variant]
        return fn1(self.inputs), fn2(self.inputs)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["inputs"]["taus"] = list(self.inputs.taus)
        d["inputs"]["d_norms"] = list(self.inputs.d_norms)
        return d


def _weighted_sum(inp: BoundInputs, weighted: bool) -> float:
    if weighted:
        return math.fsum(math.exp(inp.gamma * (inp.omega - tau)) * dn
                         for tau, dn in zip(inp.taus, inp.d_norms))
    return math.fsum(inp.d_norms)


def _growth_factor(inp: BoundInputs) -> float:
    """``(e^{gamma omega} - 1)/gamma``, continuous through ``gamma = 0``."""
    if inp.gamma == _GAMMA_ZERO:
        return inp.omega
    return math.expm1(inp.gamma * inp.omega) / inp.gamma


def c1_general(inp: BoundInputs, tight: bool = False) -> float:
    base = inp.M * max(inp.norm_P2, 1.0) * (inp.M * inp.norm_G + 1.0)
    if inp.gamma > 0:
        scale = inp.gamma * inp.omega * (1.0 if tight else 2.0)
        return base * max(math.exp(scale), 1.0) * _weighted_sum(inp, True)
    return base * _weighted_sum(inp, False)


def c2_general(inp: BoundInputs) -> float:
    if inp.gamma == _GAMMA_ZERO:
        return (inp.M * max(inp.norm_P2, 1.0) * inp.norm_G + max(inp.norm_P, 1.0)) * inp.M * inp.omega
    lead = inp.M * max(inp.norm_P2, 1.0) * inp.norm_G * math.exp(inp.gamma * inp.omega)
    return (lead + max(inp.norm_P, 1.0)) * inp.M * _growth_factor(inp)


def c1_commuting(inp: BoundInputs) -> float:
    base = inp.M * inp.norm_G * max(inp.norm_P, 1.0)
    if inp.gamma > 0:
        return base * max(inp.norm_rho, math.exp(inp.gamma * inp.omega)) * _weighted_sum(inp, True)
    return base * max(inp.norm_rho, 1.0) * _weighted_sum(inp, False)


def c2_commuting(inp: BoundInputs) -> float:
    return inp.M * inp.norm_G * max(inp.norm_P, 1.0) * max(inp.norm_rho, 1.0) * _growth_factor(inp)


_FORMULAS = {"general": (c1_general, c2_general), "commuting": (c1_commuting, c2_commuting)}


def bound_inputs(sys: SystemSpec, growth: GrowthEstimate) -> BoundInputs:
    P = sys.full_product
    return BoundInputs(
        M=float(growth.M), gamma=float(growth.gamma), omega=sys.omega,
        norm_P=opnorm(P), norm_P2=opnorm(P @ P), norm_G=opnorm(sys.gap_inverse),
        norm_rho=opnorm(sys.rho),
        taus=tuple(float(x) for x in sys.schedule.taus),
        d_norms=tuple(float(np.linalg.norm(d)) for d in sys.schedule.ds),
    )


def bound_report(sys: SystemSpec, growth: GrowthEstimate | None = None, variant: str = "general") -> BoundReport:
    """Both bounds of one variant with branch tags and the echoed inputs."""
    growth = growth or estimate_growth(sys.A, sys.omega)
    inp = bound_inputs(sys, growth)
    fn1, fn2 = _FORMULAS[variant]
    return BoundReport(
        C1=fn1(inp), C2=fn2(inp), variant=variant,
        C1_branch="pos" if inp.gamma > 0 else "nonpos",
        C2_branch="zero" if inp.gamma == _GAMMA_ZERO else "nonzero",
        inputs=inp,
        C1_tight=c1_general(inp, tight=True) if variant == "general" else None,
    )


def bound_C1(sys: SystemSpec, growth: GrowthEstimate | None = None) -> BoundReport:
    return bound_report(sys, growth, "general")


def bound_C1_commuting(sys: SystemSpec, growth: GrowthEstimate | None = None) -> BoundReport:
    return bound_report(sys, growth, "commuting")


bound_C2 = bound_C1
bound_C2_commuting = bound_C1_commuting


# --- numeric left-hand sides -----------------------------------------------------------------


def kernel_integral_numeric(sys: SystemSpec, t: float, quad: QuadratureConfig | None = None,
                            variant: str = "general") -> float:
    """``int_0^omega ||H(t, tau)|| dtau`` on panels split at the impulse times and at ``t``."""
    quad = quad or QuadratureConfig()
    breaks = list(sys.schedule.taus) + [t]

    def fun(taus):
        return opnorms(kernel_matrix(sys, t, taus, variant))

    return float(integrate(fun, 0.0, sys.omega, breaks, quad))


def kernel_sum_numeric(sys: SystemSpec, t: float, mode: str = "matrix_norm",
                       variant: str = "general") -> float:
    """``sum_i ||H(t, tau_i)|| ||d_i||`` (or ``sum_i ||H(t, tau_i) d_i||`` with mode="vector")."""
    if sys.m == 0:
        return 0.0
    H = kernel_matrix(sys, t, sys.schedule.taus, variant)
    ds = sys.schedule.ds
    if mode == "matrix_norm":
        return float(np.dot(opnorms(H), np.linalg.norm(ds, axis=1)))
    if mode == "vector":
        return float(np.sum(np.linalg.norm(np.einsum("kij,kj->ki", H, ds), axis=1)))
    raise ValueError(f"unknown mode {mode!r}")


def t_grid(sys: SystemSpec, points: int = 64) -> np.ndarray:
    return np.linspace(0.0, sys.omega, points)


@dataclass(frozen=True)
class NumericMaxima:
    integral_max: float
    integral_argmax: float
    sum_max: float
    sum_argmax: float
    grid_points: int


def numeric_maxima(sys: SystemSpec, points: int = 64, quad: QuadratureConfig | None = None,
                   variant: str = "general", mode: str = "matrix_norm") -> NumericMaxima:
    ts = t_grid(sys, points)
    ints = np.array([kernel_integral_numeric(sys, t, quad, variant) for t in ts])
    sums = np.array([kernel_sum_numeric(sys, t, mode, variant) for t in ts])
    i, j = int(np.argmax(ints)), int(np.argmax(sums))
    return NumericMaxima(float(ints[i]), float(ts[i]), float(sums[j]), float(ts[j]), points)


def kernel_solution(sys: SystemSpec, ts, forcing=None, quad: QuadratureConfig | None = None) -> np.ndarray:
    """``int_0^omega H(t, tau) f(tau) dtau + sum_i H(t, tau_i) d_i`` at each ``t`` (left limits)."""
    quad = quad or QuadratureConfig(nodes=12, panels=4)
    forcing = forcing if forcing is not None else sys.forcing
    ts = np.asarray(ts, dtype=float).reshape(-1)
    out = np.zeros((len(ts), sys.n))
    for k, t in enumerate(ts):
        if forcing is not None:
            nodes, weights = composite_rule(0.0, sys.omega, list(sys.schedule.taus) + [t],
                                            quad.panels, quad.nodes)
            H = kernel_matrix(sys, t, nodes)
            F = np.array([np.asarray(forcing(s), dtype=float).reshape(sys.n) for s in nodes])
            out[k] = np.einsum("k,kij,kj->i", weights, H, F)
        if sys.m:
            H = kernel_matrix(sys, t, sys.schedule.taus)
            out[k] += np.einsum("kij,kj->i", H, sys.schedule.ds)
    return out
