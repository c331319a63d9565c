"""Periodic solutions: boundary-equation linear solve, Picard iteration, certificates.

The solution operator ``R`` of the semilinear problem maps ``y`` to the periodic
solution of the linear problem forced by ``F(t) = f(t, y(t), z(t))``. It is discretised by
exponential collocation: each impulse-free segment is split into equal panels carrying
``q`` Gauss-Legendre nodes, ``F`` is interpolated on each panel by its node values, and the
linear problem is propagated exactly (matrix exponentials plus high-order quadrature of
the Duhamel term). The periodic start value is ``G u(omega)`` with ``u`` the response
started from zero and ``G`` the gap inverse.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import _backend
from .errors import LipschitzEstimateUnstable, NoConvergence, NonFiniteState, PreconditionFailed
from .flow import PiecewiseTrajectory, Segment, evolve_linear, volterra_z
from .kernel import BoundReport, bound_report, numeric_maxima
from .quadrature import QuadratureConfig, gauss_legendre, lagrange_matrix
from .semigroup import GrowthEstimate, estimate_growth, expm_many, opnorm
from .system import SystemSpec

log = logging.getLogger(__name__)

__all__ = [
    "PicardConfig", "ConvergenceLog", "CollocationMesh", "solve_linear_periodic", "picard_apply",
    "solve_semilinear_picard", "Certificate", "contraction_certificate", "BallCheckReport",
    "existence_ball", "estimate_lipschitz", "sup_norm_f0",
]


def solve_linear_periodic(sys: SystemSpec, quad: QuadratureConfig | None = None, *,
                          samples_per_segment: int | None = None, t_eval=None) -> PiecewiseTrajectory:
    """Periodic solution of the linear problem ``y' = Ay + forcing(t)`` with impulses.

    Solves ``(rho - T(omega) P) y0 = u(omega)``, ``u`` being the response from ``y0 = 0``
    over one period, then evolves from ``y0``. By default samples are spaced about
    ``omega / 256`` apart (at least 17 per segment) so that finite-difference checks of the
    output are meaningful.
    """
    quad = quad or QuadratureConfig()
    G = sys.gap_inverse
    zero = np.zeros(sys.n)
    u = evolve_linear(sys.A, sys.schedule, zero, sys.forcing, sys.omega, quad, samples_per_segment=2)
    y0 = G @ u.segments[-1].states[-1]
    if samples_per_segment is None and t_eval is None:
        edges = np.concatenate([[0.0], sys.schedule.taus, [sys.omega]])
        longest = float(np.max(np.diff(edges)))
        samples_per_segment = max(17, int(np.ceil(256 * longest / sys.omega)) + 1)
    traj = evolve_linear(sys.A, sys.schedule, y0, sys.forcing, sys.omega, quad,
                         samples_per_segment=samples_per_segment, t_eval=t_eval)
    traj.meta["y0"] = y0
    return traj


# --- collocation mesh -----------------------------------------------------------------------


class CollocationMesh:
    """Panels, nodes and precomputed propagators for one discretisation of ``R``."""

    def __init__(self, sys: SystemSpec, panels: int = 4, q: int = 8):
        if panels < 1 or q < 2:
            raise ValueError("need at least one panel and two nodes")
        self.sys, self.panels, self.q = sys, panels, q
        n = sys.n
        x, _ = gauss_legendre(q)
        edges = [0.0, *map(float, sys.schedule.taus), sys.omega]
        self.edges = edges
        self.seg_out_times: list[np.ndarray] = []
        self.seg_node_pos: list[np.ndarray] = []
        self._K: list[np.ndarray] = []
        self._Phi: list[np.ndarray] = []
        self._sub_interp: list[np.ndarray] = []
        node_times = []
        for a, b in zip(edges[:-1], edges[1:]):
            h = (b - a) / panels
            local = 0.5 * h * (x + 1.0)
            starts = a + h * np.arange(panels)
            out = np.concatenate([np.concatenate([[s], s + local]) for s in starts] + [[b]])
            self.seg_out_times.append(out)
            pos = np.array([p * (q + 1) + 1 + i for p in range(panels) for i in range(q)])
            self.seg_node_pos.append(pos)
            node_times.append(out[pos])
            K, Phi = self._panel_operators(h, local)
            self._K.append(K)
            self._Phi.append(np.tile(Phi, (panels, 1, 1)))
        self.node_times = np.concatenate(node_times)
        self.n_nodes = len(self.node_times)
        # flat sweep layout: segment states followed by a jump step at each impulse
        Phis, self.seg_offsets = [], []
        off = 0
        for j in range(len(edges) - 1):
            self.seg_offsets.append(off)
            Phis.append(self._Phi[j])
            off += len(self.seg_out_times[j])
            if j < sys.m:
                Phis.append(sys.impulse_factors[j][None])
        self.sweep_Phi = np.ascontiguousarray(np.concatenate(Phis))
        self.n_states = off
        # map from sweep state index to (segment, position)
        self.node_state_index = np.concatenate(
            [self.seg_offsets[j] + self.seg_node_pos[j] for j in range(len(edges) - 1)])
        self._jump_c = np.array(sys.schedule.ds) if sys.m else np.zeros((0, n))
        self._q_sub = q

    def _panel_operators(self, h: float, local: np.ndarray):
        """Duhamel weights ``K[r, i]`` on the q+1 sub-intervals of a panel, and ``exp(A delta_r)``."""
        A, q = self.sys.A, self.q
        pts = np.concatenate([[0.0], local, [h]])
        xs, ws = gauss_legendre(q + 2)
        K = np.empty((q + 1, q, self.sys.n, self.sys.n))
        for r in range(q + 1):
            lo, hi = pts[r], pts[r + 1]
            s = lo + 0.5 * (hi - lo) * (xs + 1.0)
            w = 0.5 * (hi - lo) * ws
            E = expm_many(A, hi - s)
            L = lagrange_matrix(local, s)
            K[r] = np.einsum("l,li,lab->iab", w, L, E)
        Phi = expm_many(A, np.diff(pts))
        return K, Phi

    # forcing --------------------------------------------------------------------------------

    def forcing(self, y_nodes: np.ndarray) -> np.ndarray:
        """``F_i = f(t_i, y_i, z_i)`` at the nodes, or the explicit forcing for linear systems."""
        sys = self.sys
        if sys.problem is None:
            return np.array([sys.forcing_value(t) for t in self.node_times])
        prob = sys.problem
        taus = list(sys.schedule.taus)
        out = np.empty_like(y_nodes)
        if prob.volterra_arg == "at_s" and prob.g is not None:
            zs = self._history_z(y_nodes)
        for i, t in enumerate(self.node_times):
            if prob.volterra_arg == "at_t":
                z = volterra_z(prob, t, y_nodes[i], [s for s in taus if s < t], self.q)
            else:
                z = zs[i] if prob.g is not None else np.zeros(sys.n)
            out[i] = prob.F(t, y_nodes[i], z)
        if not np.all(np.isfinite(out)):
            raise NonFiniteState("non-finite nonlinearity on the mesh")
        return out

    def _history_z(self, y_nodes: np.ndarray) -> np.ndarray:
        """``int_0^{t_i} g(t_i, s, y(s)) ds`` using the panel interpolant of the node values."""
        prob, q = self.sys.problem, self.q
        x, w = gauss_legendre(q)
        Y = y_nodes.reshape(-1, q, self.sys.n)          # panel-major
        starts, widths = [], []
        for a, b in zip(self.edges[:-1], self.edges[1:]):
            h = (b - a) / self.panels
            starts += list(a + h * np.arange(self.panels))
            widths += [h] * self.panels
        out = np.zeros_like(y_nodes)
        idx = 0
        for p, (a, h) in enumerate(zip(starts, widths)):
            local_nodes = 0.5 * h * (x + 1.0)
            for i in range(q):
                t = a + local_nodes[i]
                acc = np.zeros(self.sys.n)
                for pp in range(p):
                    s = starts[pp] + 0.5 * widths[pp] * (x + 1.0)
                    vals = np.array([prob.g(t, sj, yj) for sj, yj in zip(s, Y[pp])], dtype=float)
                    acc += (0.5 * widths[pp] * w) @ vals.reshape(q, -1)
                sub = 0.5 * local_nodes[i] * (x + 1.0)
                L = lagrange_matrix(local_nodes, sub)
                ysub = L @ Y[p]
                vals = np.array([prob.g(t, a + sj, yj) for sj, yj in zip(sub, ysub)], dtype=float)
                acc += (0.5 * local_nodes[i] * w) @ vals.reshape(q, -1)
                out[idx] = acc
                idx += 1
        return out

    # linear periodic response ------------------------------------------------------------------

    def _sweep_c(self, F_nodes: np.ndarray) -> np.ndarray:
        sys, q, P = self.sys, self.q, self.panels
        cs = []
        start = 0
        for j in range(len(self.edges) - 1):
            F = F_nodes[start:start + P * q].reshape(P, q, sys.n)
            start += P * q
            cs.append(np.einsum("riab,pib->pra", self._K[j], F).reshape(P * (q + 1), sys.n))
            if j < sys.m:
                cs.append(self._jump_c[j][None])
        return np.ascontiguousarray(np.concatenate(cs))

    def periodic_response(self, F_nodes: np.ndarray) -> np.ndarray:
        """All sweep states of the periodic solution forced by the node values ``F``."""
        c = self._sweep_c(F_nodes)
        u = _backend.affine_sweep(self.sweep_Phi, c, np.zeros(self.sys.n))
        y0 = self.sys.gap_inverse @ u[-1]
        return _backend.affine_sweep(self.sweep_Phi, c, y0)

    def node_values(self, states: np.ndarray) -> np.ndarray:
        return states[self.node_state_index]

    def to_trajectory(self, states: np.ndarray) -> PiecewiseTrajectory:
        segs = []
        for j, times in enumerate(self.seg_out_times):
            off = self.seg_offsets[j]
            segs.append(Segment(times.copy(), states[off:off + len(times)].copy()))
        return PiecewiseTrajectory(segs, tuple(map(float, self.sys.schedule.taus)), states[-1].copy())

    def sample(self, traj_or_fun) -> np.ndarray:
        """Sweep-state layout of a trajectory or of a callable ``t -> y``."""
        out = np.empty((self.n_states, self.sys.n))
        for j, times in enumerate(self.seg_out_times):
            off = self.seg_offsets[j]
            for i, t in enumerate(times):
                side = "R" if i == 0 else "L"
                if isinstance(traj_or_fun, PiecewiseTrajectory):
                    out[off + i] = traj_or_fun.value(float(t), side)
                else:
                    out[off + i] = np.asarray(traj_or_fun(float(t)), dtype=float).reshape(self.sys.n)
        return out

    def common_index(self) -> np.ndarray:
        """Sweep indices of panel endpoints (shared with every refinement of this mesh)."""
        idx = []
        for j, times in enumerate(self.seg_out_times):
            off = self.seg_offsets[j]
            idx += [off + p * (self.q + 1) for p in range(self.panels + 1)]
        return np.array(idx)

    def refined_common_index(self) -> np.ndarray:
        """Indices in a twice-as-fine mesh that coincide with ``common_index``."""
        idx, off = [], 0
        for j, times in enumerate(self.seg_out_times):
            fine_len = 2 * self.panels * (self.q + 1) + 1
            idx += [off + 2 * p * (self.q + 1) for p in range(self.panels + 1)]
            off += fine_len
        return np.array(idx)


def _sup_dist(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.linalg.norm(a - b, axis=1))) if len(a) else 0.0


def picard_apply(sys: SystemSpec, y: PiecewiseTrajectory, quad: QuadratureConfig | None = None) -> PiecewiseTrajectory:
    """One application of ``R`` on the mesh given by ``quad.panels`` and ``quad.nodes``."""
    quad = quad or QuadratureConfig()
    mesh = CollocationMesh(sys, quad.panels, quad.nodes)
    states = mesh.sample(y)
    out = mesh.periodic_response(mesh.forcing(mesh.node_values(states)))
    return mesh.to_trajectory(out)


@dataclass(frozen=True)
class PicardConfig:
    tol: float = 1e-10
    max_iter: int = 200
    grid: int = 4               # panels per impulse-free segment on the coarsest mesh
    quad_nodes: int = 8
    max_refine: int = 4
    nu: float | None = None     # ball radius to monitor (flag only)
    init: Callable | PiecewiseTrajectory | None = None


@dataclass
class ConvergenceLog:
    distances: list[float] = field(default_factory=list)
    levels: list[int] = field(default_factory=list)
    panels: list[int] = field(default_factory=list)
    mesh_changes: list[float] = field(default_factory=list)
    converged: bool = False
    left_ball: bool = False
    max_norm: float = 0.0

    @property
    def iterations(self) -> int:
        return len(self.distances)

    def rates(self, floor: float = 1e-12, level: int | None = None) -> list[float]:
        """``d_{k+1}/d_k`` on one mesh level, skipping distances at the rounding floor."""
        out = []
        for k in range(1, len(self.distances)):
            if self.levels[k] != self.levels[k - 1]:
                continue
            if level is not None and self.levels[k] != level:
                continue
            if self.distances[k - 1] > floor * (1.0 + self.max_norm):
                out.append(self.distances[k] / self.distances[k - 1])
        return out

    def to_dict(self) -> dict:
        d = asdict(self)
        d["iterations"] = self.iterations
        d["rates"] = self.rates()
        return d


def solve_semilinear_picard(sys: SystemSpec, cfg: PicardConfig | None = None):
    """Fixed point of ``R`` by Picard iteration with mesh refinement.

    Starts from ``cfg.init`` (zero by default). On each mesh the iteration stops when the
    sup distance of successive iterates is at most ``cfg.tol``; the mesh is then doubled
    until the panel-endpoint values of two successive meshes agree within ``cfg.tol/4``
    (scaled by ``max(1, ||y||)``).
    """
    cfg = cfg or PicardConfig()
    if cfg.max_iter < 1 or cfg.tol <= 0:
        raise ValueError("max_iter must be >= 1 and tol > 0")
    clog = ConvergenceLog()
    panels = cfg.grid
    mesh = CollocationMesh(sys, panels, cfg.quad_nodes)
    if cfg.init is None:
        Y = np.zeros((mesh.n_states, sys.n))
    else:
        Y = mesh.sample(cfg.init)
    prev = None
    for level in range(cfg.max_refine + 1):
        done = False
        for _ in range(cfg.max_iter):
            Y_new = mesh.periodic_response(mesh.forcing(mesh.node_values(Y)))
            if not np.all(np.isfinite(Y_new)):
                raise NonFiniteState("Picard iterate is not finite")
            d = _sup_dist(Y_new, Y)
            Y = Y_new
            norm = float(np.max(np.linalg.norm(Y, axis=1)))
            clog.distances.append(d)
            clog.levels.append(level)
            clog.panels.append(panels)
            clog.max_norm = max(clog.max_norm, norm)
            if cfg.nu is not None and norm > cfg.nu:
                clog.left_ball = True
            log.debug("picard level=%d iter=%d dist=%.3e", level, clog.iterations, d)
            if d <= cfg.tol:
                done = True
                break
        if not done:
            raise NoConvergence(f"Picard iteration did not reach tol={cfg.tol} in {cfg.max_iter} steps", clog)
        if prev is not None:
            prev_mesh, prev_Y = prev
            change = _sup_dist(Y[prev_mesh.refined_common_index()], prev_Y[prev_mesh.common_index()])
            clog.mesh_changes.append(change)
            if change <= 0.25 * cfg.tol * max(1.0, clog.max_norm):
                clog.converged = True
                traj = mesh.to_trajectory(Y)
                traj.meta.update(panels=panels, nodes=cfg.quad_nodes)
                return traj, clog
        if level == cfg.max_refine:
            break
        prev = (mesh, Y)
        panels *= 2
        fine = CollocationMesh(sys, panels, cfg.quad_nodes)
        Y = fine.sample(mesh.to_trajectory(Y))
        mesh = fine
    raise NoConvergence("mesh refinement did not settle", clog)


# --- certificates ---------------------------------------------------------------------------


def _fd_jacobian(fun, x: np.ndarray, h: float) -> np.ndarray:
    cols = []
    for k in range(len(x)):
        e = np.zeros_like(x)
        e[k] = h
        cols.append((np.asarray(fun(x + e), float) - np.asarray(fun(x - e), float)) / (2 * h))
    return np.array(cols).T.reshape(-1, len(x))


def estimate_lipschitz(sys: SystemSpec, nu: float, samples: int = 200, seed: int = 0,
                       safety: float = 1.5) -> tuple[float, float]:
    """Sampled local Lipschitz constants ``(L_f, L_g)`` on the ball of radius ``nu``.

    ``L_f`` bounds ``max(||df/dy||, ||df/dz||)`` (so that the difference of ``f`` is at most
    ``L_f`` times the sum of the argument differences), ``L_g`` bounds ``||dg/dy||``.
    Central differences at two step sizes; disagreement over 50% raises.
    """
    prob = sys.problem
    if prob is None:
        return 0.0, 0.0
    rng = np.random.default_rng(seed)
    n, omega = sys.n, sys.omega
    taus = list(sys.schedule.taus)

    def ball():
        v = rng.standard_normal(n)
        return nu * rng.uniform() ** (1.0 / n) * v / max(np.linalg.norm(v), 1e-300)

    Lf = Lg = 0.0
    for _ in range(samples):
        t = rng.uniform(0.0, omega)
        y = ball()
        z = volterra_z(prob, t, ball(), [s for s in taus if s < t])
        s = rng.uniform(0.0, t)
        pair = []
        for h in (1e-5 * (1.0 + nu), 1e-6 * (1.0 + nu)):
            Jy = _fd_jacobian(lambda v: prob.F(t, v, z), y, h)
            Jz = _fd_jacobian(lambda v: prob.F(t, y, v), z, h)
            val = max(opnorm(Jy), opnorm(Jz))
            if prob.g is not None:
                Jg = _fd_jacobian(lambda v: np.asarray(prob.g(t, s, v), float).reshape(-1), y, h)
                valg = opnorm(Jg)
            else:
                valg = 0.0
            pair.append((val, valg))
        for a, b in zip(pair[0], pair[1]):
            if abs(a - b) > 0.5 * max(abs(a), abs(b)) and max(abs(a), abs(b)) > 1e-8:
                raise LipschitzEstimateUnstable(f"finite-difference estimates {a:.3e} vs {b:.3e} disagree")
        Lf = max(Lf, pair[1][0])
        Lg = max(Lg, pair[1][1])
    return safety * Lf, safety * Lg


def sup_norm_f0(sys: SystemSpec, points: int = 2001) -> float:
    """``max_t ||f(t, 0, int_0^t g(t, s, 0) ds)||`` on a dense grid of ``[0, omega]``."""
    if sys.problem is None:
        if sys.forcing is None:
            return 0.0
        ts = np.linspace(0.0, sys.omega, points)
        return float(max(np.linalg.norm(sys.forcing_value(t)) for t in ts))
    prob = sys.problem
    zero = np.zeros(sys.n)
    taus = list(sys.schedule.taus)
    ts = np.unique(np.concatenate([np.linspace(0.0, sys.omega, points), taus]))
    best = 0.0
    for t in ts:
        z = volterra_z(prob, t, zero, [s for s in taus if s < t])
        best = max(best, float(np.linalg.norm(prob.F(t, zero, z))))
    return best


@dataclass
class Certificate:
    M: float
    gamma: float
    bounds: BoundReport
    nu: float
    L_f: float
    L_g: float
    L: float
    M1: float
    f0: float
    contraction_ok: bool
    norm_bound: float
    nu_consistent: bool
    alpha: float | None
    beta: float | None
    schauder_ok: bool
    ball_radius_l: float | None
    C2_numeric: float | None = None
    c2_dominates: bool | None = None
    lipschitz_source: str = "supplied"

    @property
    def C1(self) -> float:
        return self.bounds.C1

    @property
    def C2(self) -> float:
        return self.bounds.C2

    @property
    def LC2(self) -> float:
        return self.L * self.C2

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bounds"] = self.bounds.to_dict()
        d["C1"], d["C2"], d["LC2"] = self.C1, self.C2, self.LC2
        if self.beta is not None:
            d["betaC2"] = self.beta * self.C2
        return d


def contraction_certificate(sys: SystemSpec, nu: float, growth: GrowthEstimate | None = None, *,
                            variant: str = "general", samples: int = 200, seed: int = 0,
                            numeric_check: bool = False) -> Certificate:
    """Contraction and invariant-ball constants for ``R``.

    ``L = L_f (1 + omega L_g)``, equivalently ``L_f + M1 L_g`` with ``M1 = omega L_f``.
    Lipschitz constants come from the problem when supplied, otherwise from
    ``estimate_lipschitz``.
    """
    if not nu > 0:
        raise ValueError("nu must be positive")
    growth = growth or estimate_growth(sys.A, sys.omega)
    bounds = bound_report(sys, growth, variant)
    prob = sys.problem
    source = "supplied"
    if prob is None:
        Lf = Lg = 0.0
    elif prob.lipschitz_f is not None and (prob.lipschitz_g is not None or prob.g is None):
        Lf, Lg = float(prob.lipschitz_f), float(prob.lipschitz_g or 0.0)
    else:
        Lf, Lg = estimate_lipschitz(sys, nu, samples, seed)
        source = "estimated"
    L = Lf * (1.0 + sys.omega * Lg)
    f0 = sup_norm_f0(sys)
    C1, C2 = bounds.C1, bounds.C2
    LC2 = L * C2
    contraction_ok = LC2 < 1.0
    norm_bound = (f0 * C2 + C1) / (1.0 - LC2) if contraction_ok else math.inf
    alpha = prob.growth_alpha if prob is not None else 0.0
    beta = prob.growth_beta if prob is not None else 0.0
    if prob is None and sys.forcing is not None:
        alpha = f0
    schauder_ok = alpha is not None and beta is not None and beta * C2 < 1.0
    l = (alpha * C2 + C1) / (1.0 - beta * C2) if schauder_ok else None
    cert = Certificate(growth.M, growth.gamma, bounds, float(nu), Lf, Lg, L, sys.omega * Lf, f0,
                       contraction_ok, norm_bound, bool(norm_bound <= nu), alpha, beta, schauder_ok,
                       l, lipschitz_source=source)
    if numeric_check:
        num = numeric_maxima(sys, variant=variant)
        cert.C2_numeric = num.integral_max
        cert.c2_dominates = bool(num.integral_max <= C2 * (1.0 + 1e-6))
    return cert


@dataclass
class BallCheckReport:
    l: float
    samples: int
    max_ratio: float
    violations: list[int]
    tol: float

    @property
    def ok(self) -> bool:
        return not self.violations


def _random_ball_states(mesh: CollocationMesh, radius: float, rng) -> np.ndarray:
    """Random piecewise-smooth sweep states with sup norm at most ``radius``."""
    n = mesh.sys.n
    kind = rng.integers(3)
    if kind == 0:
        v = rng.standard_normal(n)
        Y = np.tile(v / np.linalg.norm(v), (mesh.n_states, 1))
    else:
        Y = np.empty((mesh.n_states, n))
        for j, times in enumerate(mesh.seg_out_times):
            off = mesh.seg_offsets[j]
            a, b = times[0], times[-1]
            x = (times - a) / max(b - a, 1e-300) * 2.0 - 1.0
            coef = rng.standard_normal((6, n)) / (1.0 + np.arange(6))[:, None] ** 2
            Y[off:off + len(times)] = np.polynomial.chebyshev.chebval(x, coef).T
    scale = np.max(np.linalg.norm(Y, axis=1))
    return Y * (radius * (1.0 if kind < 2 else rng.uniform(0.5, 1.0)) / scale)


def existence_ball(sys: SystemSpec, cert: Certificate, samples: int = 100, *, seed: int = 0,
                   tol: float = 1e-9, quad: QuadratureConfig | None = None) -> BallCheckReport:
    """Check that ``R`` maps random trajectories of norm at most ``l`` into the same ball."""
    if not cert.schauder_ok or cert.ball_radius_l is None:
        raise PreconditionFailed("beta*C2 < 1 is required for the invariant ball")
    quad = quad or QuadratureConfig(nodes=8, panels=4)
    mesh = CollocationMesh(sys, quad.panels, quad.nodes)
    rng = np.random.default_rng(seed)
    l = cert.ball_radius_l
    ratios, bad = [], []
    for k in range(samples):
        Y = _random_ball_states(mesh, l, rng)
        out = mesh.periodic_response(mesh.forcing(mesh.node_values(Y)))
        r = float(np.max(np.linalg.norm(out, axis=1))) / l if l > 0 else 0.0
        ratios.append(r)
        if l > 0 and r > 1.0 + tol:
            bad.append(k)
        elif l == 0 and np.max(np.abs(out)) > tol:
            bad.append(k)
    return BallCheckReport(l, samples, max(ratios), bad, tol)
