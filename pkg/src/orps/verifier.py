"""Numerical checks of the standing assumptions, solution validation and a shooting oracle."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import LipschitzEstimateUnstable, NewtonDiverged, OrpsError, ShortTrajectory, SingularGap
from .flow import (PiecewiseTrajectory, StepConfig, VolterraProblem, concatenate, evolve_linear,
                   evolve_semilinear, periodicity_residual, volterra_z)
from .quadrature import QuadratureConfig, integrate
from .semigroup import EPS, GrowthEstimate, check_commute, estimate_growth, opnorm
from .solver import estimate_lipschitz
from .system import SystemSpec

ASSUMPTION_IDS = tuple(f"A{k}" for k in range(1, 11))


@dataclass
class AssumptionEntry:
    id: str
    status: str            # "pass", "fail" or "not-checkable"
    residual: float
    tol: float
    detail: str = ""
    data: dict = field(default_factory=dict)


@dataclass
class AssumptionReport:
    entries: dict[str, AssumptionEntry]

    @property
    def overall(self) -> bool:
        return all(e.status != "fail" for e in self.entries.values())

    def failed(self) -> list[str]:
        return [k for k, e in self.entries.items() if e.status == "fail"]

    def __getitem__(self, key: str) -> AssumptionEntry:
        return self.entries[key]

    def to_dict(self) -> dict:
        return {"overall": self.overall, "failed": self.failed(),
                "entries": {k: asdict(e) for k, e in self.entries.items()}}


def _status(residual: float, tol: float) -> str:
    return "pass" if residual <= tol else "fail"


def _rel(a, b) -> float:
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    return float(np.linalg.norm(a - b) / (1.0 + np.linalg.norm(b)))


def _check_a2(sys: SystemSpec, tol: float) -> AssumptionEntry:
    sched = sys.schedule
    if not sched.declared:
        return AssumptionEntry("A2", "pass", 0.0, tol, "extension generated from the periodicity rule")
    worst, where = 0.0, None
    for j in range(len(sched.declared)):
        k = sched.m + j
        if sched.m == 0:
            worst, where = math.inf, k
            break
        got, want = sched.impulse(k), sched.rule_impulse(k)
        r = max(abs(got.time - want.time) / sched.omega,
                opnorm(got.B - want.B) / (1.0 + opnorm(want.B)),
                _rel(got.d, want.d))
        if r > worst:
            worst, where = r, k
    residual = worst if math.isfinite(worst) else 1.0e300
    return AssumptionEntry("A2", _status(residual, tol), residual, tol,
                           f"declared extension checked; worst impulse index {where}", {"worst_index": where})


def _check_a4(sys: SystemSpec) -> AssumptionEntry:
    from .semigroup import monodromy_gap
    gap = monodromy_gap(sys.rho, sys.T_omega, sys.full_product)
    s = np.linalg.svd(gap, compute_uv=False)
    tol = 1.0 / EPS
    cond = s[0] / s[-1] if s[-1] > 0 else math.inf
    residual = min(cond, 1.0e300) if s[0] > 0 else 1.0e300
    return AssumptionEntry("A4", _status(residual, tol), float(residual), tol,
                           f"gap condition number {residual:.3e}", {"smallest_singular_value": float(s[-1])})


def _ball(rng, n, radius):
    v = rng.standard_normal(n)
    return radius * rng.uniform() ** (1.0 / n) * v / max(np.linalg.norm(v), 1e-300)


def _z_exact(prob: VolterraProblem, t: float, upper: float, y) -> np.ndarray:
    """``int_0^upper g(t, s, y) ds`` by adaptive quadrature (y frozen)."""
    if prob.g is None or upper <= 0:
        return np.zeros_like(y)
    return integrate(lambda s: prob.g_values(t, s, y), 0.0, upper, (),
                     QuadratureConfig(nodes=10, panels=2, tol=1e-14, max_levels=10))


def _check_a5_a6(sys: SystemSpec, tol: float, samples: int, rng, radius: float):
    prob = sys.problem
    rho, omega, n = sys.rho, sys.omega, sys.n
    if prob is None:
        a5 = AssumptionEntry("A5", "pass", 0.0, tol,
                             "linear forcing is continued from [0, omega] by the rho rule")
        return a5, AssumptionEntry("A6", "pass", 0.0, tol, "no Volterra term")
    matched = literal = 0.0
    literal_failed = False
    worst_g = 0.0
    for _ in range(samples):
        t = rng.uniform(0.0, 2 * omega)
        y = _ball(rng, n, radius)
        z = _z_exact(prob, t, t, y)
        rhs = rho @ prob.F(t, y, z)
        matched = max(matched, _rel(prob.F(t + omega, rho @ y, rho @ z), rhs))
        try:
            zl = _z_exact(prob, t, t + omega, y)
            literal = max(literal, _rel(prob.F(t + omega, rho @ y, rho @ zl), rhs))
        except (ValueError, ArithmeticError, OrpsError):
            literal_failed = True
        if prob.g is not None:
            s = rng.uniform(0.0, t)
            got = np.asarray(prob.g(t + omega, s, rho @ y), float).reshape(-1)
            want = rho @ np.asarray(prob.g(t, s, y), float).reshape(-1)
            worst_g = max(worst_g, _rel(got, want))
    detail = "matched inner limits; literal reading residual "
    detail += "not evaluable" if literal_failed else f"{literal:.3e}"
    a5 = AssumptionEntry("A5", _status(matched, tol), matched, tol, detail,
                         {"matched_residual": matched, "literal_residual": None if literal_failed else literal})
    a6 = AssumptionEntry("A6", _status(worst_g, tol), worst_g, tol,
                         "g(t + omega, s, rho y) = rho g(t, s, y) sampled" if prob.g is not None else "no Volterra term")
    return a5, a6


def _check_a7(sys: SystemSpec, samples: int, seed: int, radius: float) -> AssumptionEntry:
    prob = sys.problem
    if prob is None:
        return AssumptionEntry("A7", "pass", 0.0, 0.0, "linear problem", {"L_f": 0.0, "L_g": 0.0})
    try:
        Lf, Lg = estimate_lipschitz(sys, radius, samples, seed, safety=1.0)
    except LipschitzEstimateUnstable as exc:
        return AssumptionEntry("A7", "not-checkable", 0.0, 0.0, f"sampled evidence only; {exc}")
    data = {"L_f": Lf, "L_g": Lg, "nu": radius}
    excess = 0.0
    if prob.lipschitz_f is not None:
        excess = max(excess, Lf / max(prob.lipschitz_f, 1e-300) - 1.0)
    if prob.lipschitz_g is not None and prob.g is not None:
        excess = max(excess, Lg / max(prob.lipschitz_g, 1e-300) - 1.0)
    tol = 1e-6
    if excess > tol:
        return AssumptionEntry("A7", "fail", excess, tol,
                               "sampled local constants exceed the supplied ones", data)
    return AssumptionEntry("A7", "pass", max(excess, 0.0), tol,
                           "sampled evidence only; consistent with the supplied constants"
                           if prob.lipschitz_f is not None else "sampled evidence only", data)


def _check_a8(sys: SystemSpec, samples: int, rng, radius: float) -> AssumptionEntry:
    prob = sys.problem
    if prob is None:
        return AssumptionEntry("A8", "pass", 0.0, 0.0, "linear problem", {"alpha": 0.0, "beta": 0.0})
    taus = list(sys.schedule.taus)
    r_list, f_list = [], []
    for k in range(samples):
        t = rng.uniform(0.0, sys.omega)
        y = _ball(rng, sys.n, radius * (k % 4 + 1))
        z = volterra_z(prob, t, y, [s for s in taus if s < t])
        r_list.append(np.linalg.norm(y))
        f_list.append(np.linalg.norm(prob.F(t, y, z)))
    r, fv = np.array(r_list), np.array(f_list)
    beta_fit = max(0.0, float(np.polyfit(r, fv, 1)[0])) if np.ptp(r) > 0 else 0.0
    alpha_fit = max(0.0, float(np.max(fv - beta_fit * r)))
    data = {"alpha_fit": alpha_fit, "beta_fit": beta_fit}
    tol = 1e-9
    if prob.growth_alpha is not None and prob.growth_beta is not None:
        bound = prob.growth_alpha + prob.growth_beta * r
        excess = float(np.max((fv - bound) / (1.0 + bound)))
        if excess > tol:
            return AssumptionEntry("A8", "fail", excess, tol, "samples exceed alpha + beta ||y||", data)
        return AssumptionEntry("A8", "pass", max(excess, 0.0), tol,
                               "sampled evidence only; consistent with the supplied constants", data)
    return AssumptionEntry("A8", "pass", 0.0, tol, "sampled evidence only; fitted constants recorded", data)


def _check_a9(sys: SystemSpec, growth: GrowthEstimate | None, tol: float) -> AssumptionEntry:
    growth = growth or estimate_growth(sys.A, sys.omega)
    bad = growth.violations(sys.A, 2 * sys.omega, 1000, tol)
    return AssumptionEntry("A9", "pass" if len(bad) == 0 else "fail", float(len(bad)), 0.0,
                           f"M={growth.M:.6g}, gamma={growth.gamma:.6g} ({growth.method}) on [0, 2 omega]",
                           {"M": growth.M, "gamma": growth.gamma, "violations": len(bad)})


def check_assumptions(sys: SystemSpec, tol: float = 1e-10, samples: int = 64, *, seed: int = 0,
                      radius: float = 1.0, growth: GrowthEstimate | None = None) -> AssumptionReport:
    """Residual-based verdicts for A1..A10 on one instance. Never raises on a failed check."""
    rng = np.random.default_rng(seed)
    entries: dict[str, AssumptionEntry] = {}
    res = max([check_commute(sys.A, B, tol)[1] for B in sys.schedule.Bs], default=0.0)
    entries["A1"] = AssumptionEntry("A1", _status(res, tol), res, tol, "commutators [A, B_k]")
    entries["A2"] = _check_a2(sys, tol)
    res3 = max([check_commute(sys.rho, sys.A, tol)[1]]
               + [check_commute(sys.rho, B, tol)[1] for B in sys.schedule.Bs])
    s = np.linalg.svd(sys.rho, compute_uv=False)
    if s[-1] <= EPS * s[0] * sys.n:
        entries["A3"] = AssumptionEntry("A3", "fail", 1.0e300, tol, "rho is not invertible")
    else:
        entries["A3"] = AssumptionEntry("A3", _status(res3, tol), res3, tol, "commutators [rho, A], [rho, B_k]")
    entries["A4"] = _check_a4(sys)
    entries["A5"], entries["A6"] = _check_a5_a6(sys, tol, samples, rng, radius)
    entries["A7"] = _check_a7(sys, samples, seed, radius)
    entries["A8"] = _check_a8(sys, samples, rng, radius)
    entries["A9"] = _check_a9(sys, growth, 1e-12)
    entries["A10"] = AssumptionEntry("A10", "pass", 0.0, 0.0, "finite-dimensional state space")
    return AssumptionReport(entries)


# --- shooting ---------------------------------------------------------------------------------


@dataclass(frozen=True)
class NewtonConfig:
    tol: float = 1e-11
    max_iter: int = 30
    fd_step: float = 1e-6
    step: StepConfig = StepConfig(h=2e-3, adaptive=False)


def _as_problem(sys: SystemSpec) -> VolterraProblem:
    if sys.problem is not None:
        return sys.problem
    return VolterraProblem(f=lambda t, y, z: sys.forcing_value(t))


def period_map(sys: SystemSpec, y0, step: StepConfig | None = None) -> np.ndarray:
    """``Y(omega; y0)``: the state just before ``omega`` of the evolution started at ``y0``."""
    traj = evolve_semilinear(sys.A, sys.schedule, _as_problem(sys), y0, sys.omega,
                             step or NewtonConfig().step, samples_per_segment=2)
    return traj.segments[-1].states[-1]


def shooting_oracle(sys: SystemSpec, y0_guess=None, cfg: NewtonConfig | None = None) -> np.ndarray:
    """Newton iteration on ``Y(omega; y0) - rho y0 = 0`` with a finite-difference Jacobian."""
    cfg = cfg or NewtonConfig()
    y = np.zeros(sys.n) if y0_guess is None else np.asarray(y0_guess, float).reshape(sys.n).copy()
    rho = sys.rho

    def F(v):
        return period_map(sys, v, cfg.step) - rho @ v

    def jacobian(v):
        h = cfg.fd_step * (1.0 + np.linalg.norm(v))
        J = np.empty((sys.n, sys.n))
        for k in range(sys.n):
            e = np.zeros(sys.n)
            e[k] = h
            J[:, k] = (F(v + e) - F(v - e)) / (2 * h)
        s = np.linalg.svd(J, compute_uv=False)
        if s[-1] <= 1e-12 * max(s[0], 1.0):
            raise NewtonDiverged("shooting Jacobian is singular")
        return J

    # chord iteration: the Jacobian is refreshed only when the residual stalls
    r = F(y)
    J = None
    prev = math.inf
    for _ in range(cfg.max_iter):
        norm_r = float(np.linalg.norm(r))
        if norm_r <= cfg.tol * (1.0 + np.linalg.norm(y)):
            if J is None:
                jacobian(y)  # an isolated root is required, not just a root
            return y
        if J is None or norm_r > 0.25 * prev:
            J = jacobian(y)
        prev = norm_r
        y = y - np.linalg.solve(J, r)
        r = F(y)
        if not np.all(np.isfinite(r)):
            raise NewtonDiverged("shooting residual is not finite")
    if np.linalg.norm(r) <= cfg.tol * (1.0 + np.linalg.norm(y)):
        return y
    raise NewtonDiverged(f"no convergence in {cfg.max_iter} Newton steps (residual {np.linalg.norm(r):.3e})")


# --- validation -------------------------------------------------------------------------------


def fornberg_weights(x0: float, xs: np.ndarray, order: int = 1) -> np.ndarray:
    """Finite-difference weights for the ``order``-th derivative at ``x0`` on nodes ``xs``."""
    n = len(xs)
    c = np.zeros((n, order + 1))
    c1, c4 = 1.0, xs[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, order)
        c2, c5, c4 = 1.0, c4, xs[i] - x0
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


@dataclass
class ValidationReport:
    periodicity: float
    endpoint: float
    ode: float
    jumps: list[float]
    bad_jumps: list[int]
    tol: float
    ode_tol: float

    @property
    def ok(self) -> bool:
        return (self.periodicity <= self.tol and self.endpoint <= self.tol
                and self.ode <= self.ode_tol and not self.bad_jumps)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ok"] = self.ok
        return d


def _rhs(sys: SystemSpec, traj: PiecewiseTrajectory, t: float, y: np.ndarray) -> np.ndarray:
    prob = sys.problem
    if prob is None:
        return sys.A @ y + sys.forcing_value(t)
    taus = [s for s in sys.schedule.taus if s < t]
    if prob.volterra_arg == "at_t":
        z = volterra_z(prob, t, y, taus)
    elif prob.g is None or t <= 0:
        z = np.zeros(sys.n)
    else:
        def integrand(s):
            return np.array([np.asarray(prob.g(t, si, traj.value(float(si), "L")), float).reshape(-1)
                             for si in s])
        z = integrate(integrand, 0.0, t, taus, QuadratureConfig(nodes=8, panels=2, tol=1e-10))
    return sys.A @ y + prob.F(t, y, z)


def ode_residual(sys: SystemSpec, traj: PiecewiseTrajectory, stencil: int = 5) -> float:
    """Max of ``||y'(t) - rhs(t, y)|| / (1 + ||rhs||)`` over samples, derivative by finite differences.

    Centred 5-point stencils inside each smooth segment, one-sided near its ends.
    """
    worst = 0.0
    for seg in traj.segments:
        ts, ys = seg.times, seg.states
        if len(ts) < stencil:
            continue
        for i in range(len(ts)):
            lo = min(max(0, i - stencil // 2), len(ts) - stencil)
            w = fornberg_weights(ts[i], ts[lo:lo + stencil])
            dy = w @ ys[lo:lo + stencil]
            rhs = _rhs(sys, traj, float(ts[i]), ys[i])
            worst = max(worst, float(np.linalg.norm(dy - rhs) / (1.0 + np.linalg.norm(rhs))))
    return worst


def jump_residuals(sys: SystemSpec, traj: PiecewiseTrajectory) -> list[float]:
    """``||y(tau_k+) - (E + B_k) y(tau_k) - d_k|| / (1 + ||y(tau_k+)||)`` per in-period impulse."""
    out = []
    for k, tau in enumerate(sys.schedule.taus):
        imp = sys.schedule.impulse(k)
        left = traj.left_limit(float(tau))
        right = traj.right_limit(float(tau))
        want = left + imp.B @ left + imp.d
        out.append(float(np.linalg.norm(right - want) / (1.0 + np.linalg.norm(want))))
    return out


def extend_by_simulation(sys: SystemSpec, traj: PiecewiseTrajectory, step: StepConfig | None = None,
                         quad: QuadratureConfig | None = None) -> PiecewiseTrajectory:
    """Continue ``traj`` from ``omega`` to ``2 omega`` with the extended schedule."""
    omega = sys.omega
    t_eval = traj.sample_times() + omega
    y_end = traj.terminal_right
    if sys.problem is None:
        forcing = sys.forcing_extended if sys.forcing is not None else None
        ext = evolve_linear(sys.A, sys.schedule, y_end, forcing, 2 * omega,
                            quad or QuadratureConfig(tol=1e-13), t0=omega, t_eval=t_eval)
    else:
        ext = evolve_semilinear(sys.A, sys.schedule, sys.problem, y_end, 2 * omega,
                                step or StepConfig(h=1e-2, tol=1e-12), t0=omega, t_eval=t_eval,
                                history=traj)
    return concatenate(traj, ext)


def validate_solution(sys: SystemSpec, traj: PiecewiseTrajectory, tol: float = 1e-8, *,
                      ode_tol: float = 1e-5, step: StepConfig | None = None) -> ValidationReport:
    """Periodicity of the re-simulated extension, ODE residual and jump residuals of ``traj``."""
    omega = sys.omega
    if abs(traj.t0) > 1e-12 or abs(traj.t_end - omega) > 1e-12 * max(1.0, omega):
        raise ShortTrajectory(f"trajectory must cover [0, {omega}], got [{traj.t0}, {traj.t_end}]")
    ext = extend_by_simulation(sys, traj, step)
    per = periodicity_residual(ext, sys.rho, omega)
    y0 = traj.segments[0].states[0]
    end = float(np.linalg.norm(traj.left_limit(omega) - sys.rho @ y0) / (1.0 + np.linalg.norm(y0)))
    jumps = jump_residuals(sys, traj)
    bad = [k for k, r in enumerate(jumps) if r > tol]
    return ValidationReport(per, end, ode_residual(sys, traj), jumps, bad, tol, ode_tol)
