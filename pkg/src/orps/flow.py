"""Impulse bookkeeping and forward evolution of impulsive systems.

Conventions used throughout the package:

* windows are open on both ends: an impulse at ``tau`` acts on ``(s, t)`` only if
  ``s < tau < t``;
* the state stored *at* an impulse time is the left limit, the post-jump state is kept
  separately as the right limit;
* ordered products put later impulses on the left.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import (DimensionMismatch, InvalidSchedule, NonFiniteState, ReversedInterval,
                     ShortTrajectory, StepFailure)
from .quadrature import QuadratureConfig, composite_rule, gauss_legendre, integrate
from .semigroup import as_matrix, expm, expm_many

_TIME_MATCH = 1e-12


@dataclass(frozen=True)
class Impulse:
    index: int          # 0-based index in the extended sequence
    time: float
    B: np.ndarray
    d: np.ndarray


class ImpulseSchedule:
    """The ``m`` in-period impulses ``(tau_k, B_k, d_k)`` and their periodic extension.

    Beyond the first period the extension ``tau_{k+m} = tau_k + omega``, ``B_{k+m} = B_k``,
    ``d_{k+m} = rho d_k`` is used, unless later impulses were declared explicitly through
    ``declared``; declared impulses take precedence so that an inconsistent declaration
    is simulated as written (and flagged by the assumption checker).
    """

    def __init__(self, omega: float, taus: Sequence[float], Bs, ds, rho,
                 declared: Sequence[tuple[float, np.ndarray, np.ndarray]] = ()):
        self.omega = float(omega)
        if not (self.omega > 0 and math.isfinite(self.omega)):
            raise InvalidSchedule("omega must be positive and finite")
        self.rho = as_matrix(rho, "rho")
        n = self.rho.shape[0]
        self.taus = np.asarray(taus, dtype=float).reshape(-1)
        m = len(self.taus)
        self.Bs = np.asarray(Bs, dtype=float).reshape(m, n, n) if m else np.zeros((0, n, n))
        self.ds = np.asarray(ds, dtype=float).reshape(m, n) if m else np.zeros((0, n))
        if m:
            if np.any(self.taus <= 0) or np.any(self.taus >= self.omega):
                raise InvalidSchedule("impulse times must lie strictly inside (0, omega)")
            if np.any(np.diff(self.taus) <= 0):
                raise InvalidSchedule("impulse times must be strictly increasing")
            if not (np.all(np.isfinite(self.Bs)) and np.all(np.isfinite(self.ds))):
                raise InvalidSchedule("impulse data must be finite")
        declared = sorted(((float(t), np.asarray(B, float).reshape(n, n),
                            np.asarray(d, float).reshape(n)) for t, B, d in declared),
                          key=lambda item: item[0])
        if declared and declared[0][0] < self.omega:
            raise InvalidSchedule("declared extension impulses must lie at or beyond omega")
        self.declared = tuple(declared)
        for arr in (self.taus, self.Bs, self.ds):
            arr.setflags(write=False)

    @property
    def m(self) -> int:
        return len(self.taus)

    @property
    def n(self) -> int:
        return self.rho.shape[0]

    @classmethod
    def empty(cls, omega, rho):
        return cls(omega, [], [], [], rho)

    def impulse(self, k: int) -> Impulse:
        """Impulse ``k`` (0-based) of the extended sequence."""
        m = self.m
        if k < m:
            return Impulse(k, float(self.taus[k]), self.Bs[k], self.ds[k])
        j = k - m
        if j < len(self.declared):
            t, B, d = self.declared[j]
            return Impulse(k, t, B, d)
        period, base = divmod(k, m)
        d = self.ds[base]
        for _ in range(period):
            d = self.rho @ d
        return Impulse(k, float(self.taus[base] + period * self.omega), self.Bs[base], d)

    def rule_impulse(self, k: int) -> Impulse:
        """Impulse ``k`` as dictated by the periodic-extension rule alone."""
        period, base = divmod(k, self.m)
        d = self.ds[base]
        for _ in range(period):
            d = self.rho @ d
        return Impulse(k, float(self.taus[base] + period * self.omega), self.Bs[base], d)

    def between(self, s: float, t: float) -> list[Impulse]:
        """Impulses with ``s < tau < t``, in time order."""
        if s > t:
            raise ReversedInterval(f"s={s} > t={t}")
        if self.m == 0 or t <= 0:
            return []
        out = []
        first_period = max(0, int(math.floor(s / self.omega)) - 1)
        k = first_period * self.m
        while True:
            imp = self.impulse(k)
            if imp.time >= t:
                break
            if imp.time > s:
                out.append(imp)
            k += 1
        return out

    def times_between(self, s: float, t: float) -> list[float]:
        return [imp.time for imp in self.between(s, t)]


def impulse_count(schedule: ImpulseSchedule, s: float, t: float) -> int:
    """Number of impulses with ``s < tau_k < t`` (extended schedule)."""
    return len(schedule.between(s, t))


def transition_product(schedule: ImpulseSchedule, s: float, t: float) -> np.ndarray:
    """Ordered product of ``E + B_k`` over the open window, later impulses on the left."""
    P = np.eye(schedule.n)
    for imp in schedule.between(s, t):
        P = (np.eye(schedule.n) + imp.B) @ P
    return P


def apply_jump(B: np.ndarray, d: np.ndarray, left: np.ndarray) -> np.ndarray:
    return left + (B @ left + d)


@dataclass
class Segment:
    times: np.ndarray       # increasing, first = segment start, last = segment end
    states: np.ndarray      # (len(times), n); first row is the post-jump state at the start


@dataclass
class PiecewiseTrajectory:
    """Left-continuous piecewise trajectory with explicit one-sided limits at jumps.

    ``segments[j]`` covers ``[b_j, b_{j+1}]``; its first row is the right limit at
    ``b_j`` and its last row the left limit at ``b_{j+1}``. ``jump_times`` lists the
    interior breakpoints where an impulse acted; ``terminal_right`` is the state just
    after ``t_end`` (differs from the last sample only if an impulse sits at ``t_end``).
    """

    segments: list[Segment]
    jump_times: tuple[float, ...] = ()
    terminal_right: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.segments:
            raise ValueError("trajectory needs at least one segment")
        if self.terminal_right is None:
            self.terminal_right = self.segments[-1].states[-1].copy()

    @property
    def n(self) -> int:
        return self.segments[0].states.shape[1]

    @property
    def t0(self) -> float:
        return float(self.segments[0].times[0])

    @property
    def t_end(self) -> float:
        return float(self.segments[-1].times[-1])

    @property
    def breakpoints(self) -> list[float]:
        return [self.t0] + [float(s.times[-1]) for s in self.segments]

    @property
    def right_limits(self) -> dict[float, np.ndarray]:
        """Post-jump state for every impulse time inside the trajectory."""
        out = {}
        for j, seg in enumerate(self.segments[1:]):
            t = float(seg.times[0])
            if self.is_jump(t):
                out[t] = seg.states[0]
        return out

    def is_jump(self, t: float) -> bool:
        return any(abs(t - tj) <= _TIME_MATCH * max(1.0, abs(t)) for tj in self.jump_times)

    def left_limit(self, t: float) -> np.ndarray:
        for seg in self.segments:
            if abs(seg.times[-1] - t) <= _TIME_MATCH * max(1.0, abs(t)):
                return seg.states[-1]
        return self.value(t, "L")

    def right_limit(self, t: float) -> np.ndarray:
        if abs(t - self.t_end) <= _TIME_MATCH * max(1.0, abs(t)):
            return self.terminal_right
        for seg in self.segments:
            if abs(seg.times[0] - t) <= _TIME_MATCH * max(1.0, abs(t)):
                return seg.states[0]
        return self.value(t, "R")

    def rows(self) -> Iterator[tuple[float, str, np.ndarray]]:
        """Samples in time order as ``(t, side, y)``; jump times appear twice (L then R)."""
        for j, seg in enumerate(self.segments):
            start = 1 if j > 0 else 0
            for i in range(start, len(seg.times)):
                t = float(seg.times[i])
                last = i == len(seg.times) - 1
                if last and j + 1 < len(self.segments) and self.is_jump(t):
                    yield t, "L", seg.states[i]
                    yield t, "R", self.segments[j + 1].states[0]
                else:
                    yield t, "-", seg.states[i]

    def sample_times(self) -> np.ndarray:
        return np.array([t for t, _, _ in self.rows()])

    def sup_norm(self) -> float:
        return max(float(np.max(np.linalg.norm(s.states, axis=1))) for s in self.segments)

    def _segment_for(self, t: float, side: str) -> Segment:
        tol = _TIME_MATCH * max(1.0, abs(t))
        if t < self.t0 - tol or t > self.t_end + tol:
            raise ValueError(f"t={t} outside [{self.t0}, {self.t_end}]")
        if side == "R":
            for seg in self.segments:
                if seg.times[0] - tol <= t < seg.times[-1] - tol:
                    return seg
            return self.segments[-1]
        for seg in self.segments:
            if seg.times[0] + tol < t <= seg.times[-1] + tol:
                return seg
        return self.segments[0]

    def value(self, t: float, side: str = "L") -> np.ndarray:
        """State at ``t``; ``side`` picks the one-sided limit at breakpoints.

        Off-sample values use local Lagrange interpolation through up to 8 neighbouring
        samples of the same segment.
        """
        seg = self._segment_for(t, side)
        ts = seg.times
        tol = _TIME_MATCH * max(1.0, abs(t))
        hit = np.nonzero(np.abs(ts - t) <= tol)[0]
        if hit.size:
            return seg.states[hit[0] if side == "R" else hit[-1]].copy()
        k = min(8, len(ts))
        i = int(np.searchsorted(ts, t))
        lo = max(0, min(i - k // 2, len(ts) - k))
        xs = ts[lo:lo + k]
        ys = seg.states[lo:lo + k]
        w = np.ones(k)
        for a in range(k):
            for b in range(k):
                if a != b:
                    w[a] *= (t - xs[b]) / (xs[a] - xs[b])
        return w @ ys


def concatenate(first: PiecewiseTrajectory, second: PiecewiseTrajectory) -> PiecewiseTrajectory:
    """Join two trajectories meeting at ``first.t_end == second.t0``."""
    if abs(first.t_end - second.t0) > _TIME_MATCH * max(1.0, abs(first.t_end)):
        raise ValueError("trajectories do not meet")
    jumps = list(first.jump_times)
    if not np.array_equal(first.segments[-1].states[-1], second.segments[0].states[0]):
        jumps.append(first.t_end)
    jumps += list(second.jump_times)
    return PiecewiseTrajectory(first.segments + second.segments, tuple(jumps),
                               second.terminal_right, dict(first.meta))


def _segment_sample_times(a: float, b: float, samples: int, t_eval) -> np.ndarray:
    pts = [a, b]
    if t_eval is not None:
        pts += [float(x) for x in t_eval if a < x < b]
    else:
        pts += list(np.linspace(a, b, max(samples, 2))[1:-1])
    return np.unique(np.array(pts))


def _breakpoints(schedule: ImpulseSchedule, t0: float, t_end: float):
    imps = schedule.between(t0, t_end)
    edges = [t0] + [imp.time for imp in imps] + [t_end]
    return imps, edges


def _terminal_jump(schedule: ImpulseSchedule, t_end: float, y: np.ndarray) -> np.ndarray:
    for imp in schedule.between(t_end - 0.5 * schedule.omega, t_end + 0.5 * schedule.omega):
        if abs(imp.time - t_end) <= _TIME_MATCH * max(1.0, abs(t_end)):
            return apply_jump(imp.B, imp.d, y)
    return y.copy()


def evolve_linear(A, schedule: ImpulseSchedule, y0, forcing: Callable | None, t_end: float,
                  quad: QuadratureConfig | None = None, *, t0: float = 0.0,
                  samples_per_segment: int = 17, t_eval=None) -> PiecewiseTrajectory:
    """Evolve ``y' = Ay + forcing(t)`` with jumps ``y+ = y + B_k y + d_k``.

    ``y0`` is the state just after ``t0``. Between samples the exact propagator is used
    and the Duhamel integral is computed by adaptive composite Gauss-Legendre
    quadrature; no panel contains an impulse.
    """
    A = as_matrix(A, "A")
    quad = quad or QuadratureConfig()
    y = np.asarray(y0, dtype=float).reshape(-1).copy()
    if y.shape[0] != A.shape[0] or schedule.n != A.shape[0]:
        raise DimensionMismatch("state, generator and schedule dimensions differ")
    if t_end < t0:
        raise ReversedInterval(f"t_end={t_end} < t0={t0}")
    imps, edges = _breakpoints(schedule, t0, t_end)
    segments = []
    for j, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        ts = _segment_sample_times(a, b, samples_per_segment, t_eval)
        if len(ts) == 1:
            ts = np.array([a, b])
        prop = expm_many(A, np.diff(ts))
        states = np.empty((len(ts), len(y)))
        states[0] = y
        for i in range(1, len(ts)):
            y = prop[i - 1] @ y
            if forcing is not None:
                lo, hi = ts[i - 1], ts[i]

                def duhamel(tau, hi=hi):
                    T = expm_many(A, hi - tau)
                    F = np.array([np.asarray(forcing(s), float).reshape(-1) for s in tau])
                    return np.einsum("kij,kj->ki", T, F)

                y = y + integrate(duhamel, lo, hi, (), quad)
            states[i] = y
        segments.append(Segment(ts, states))
        if j < len(imps):
            y = apply_jump(imps[j].B, imps[j].d, y)
    return PiecewiseTrajectory(segments, tuple(imp.time for imp in imps),
                               _terminal_jump(schedule, t_end, segments[-1].states[-1]))


# --- semilinear ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VolterraProblem:
    """Nonlinearity ``f(t, y, z)`` with Volterra argument ``z`` built from ``g(t, s, y)``.

    ``volterra_arg="at_t"`` uses ``z(t) = int_0^t g(t, s, y(t)) ds``; ``"at_s"`` uses the
    conventional ``int_0^t g(t, s, y(s)) ds``. With ``g_vectorized`` the callable ``g``
    accepts an array of ``s`` values and returns shape ``(len(s), n)``.
    """

    f: Callable
    g: Callable | None = None
    lipschitz_f: float | None = None
    lipschitz_g: float | None = None
    growth_alpha: float | None = None
    growth_beta: float | None = None
    volterra_arg: str = "at_t"
    g_vectorized: bool = False
    name: str = ""

    def __post_init__(self):
        if self.volterra_arg not in ("at_t", "at_s"):
            raise ValueError(f"volterra_arg must be 'at_t' or 'at_s', not {self.volterra_arg!r}")

    def g_values(self, t: float, s: np.ndarray, y) -> np.ndarray:
        """g(t, s_i, y) for an array of s (same y); shape (len(s), n)."""
        if self.g_vectorized:
            return np.asarray(self.g(t, s, y), dtype=float).reshape(len(s), -1)
        return np.array([np.asarray(self.g(t, si, y), dtype=float).reshape(-1) for si in s])

    def F(self, t: float, y, z) -> np.ndarray:
        return np.asarray(self.f(t, y, z), dtype=float).reshape(-1)


def volterra_z(problem: VolterraProblem, t: float, y: np.ndarray, split=(), q: int = 8) -> np.ndarray:
    """``int_0^t g(t, s, y) ds`` with the state frozen at ``y`` (the ``at_t`` reading)."""
    if problem.g is None or t <= 0:
        return np.zeros_like(y, dtype=float)
    s, w = composite_rule(0.0, t, split, 1, q)
    return w @ problem.g_values(t, s, y)


@dataclass(frozen=True)
class StepConfig:
    h: float = 1e-2            # initial and maximal step
    tol: float = 1e-11         # local error tolerance (step doubling)
    h_min: float = 1e-9
    max_steps: int = 2_000_000
    adaptive: bool = True
    quad_nodes: int = 8        # Gauss nodes per piece for the Volterra integral


class _History:
    """Accepted (t, y) pairs for the ``at_s`` Volterra integral (trapezoid rule)."""

    def __init__(self, problem: VolterraProblem, prior: PiecewiseTrajectory | None):
        self.problem = problem
        self.ts: list[float] = []
        self.ys: list[np.ndarray] = []
        if prior is not None:
            for t, side, y in prior.rows():
                if side != "R":
                    self.ts.append(t)
                    self.ys.append(np.asarray(y, float))

    def push(self, t, y):
        if self.ts and t <= self.ts[-1]:
            self.ts[-1], self.ys[-1] = t, y.copy()
            return
        self.ts.append(t)
        self.ys.append(y.copy())

    def z(self, t: float, y: np.ndarray) -> np.ndarray:
        if self.problem.g is None:
            return np.zeros_like(y)
        ts = self.ts + [t] if (not self.ts or t > self.ts[-1]) else self.ts
        ys = self.ys + [y] if len(ts) > len(self.ys) else self.ys
        if len(ts) < 2:
            return np.zeros_like(y)
        vals = np.array([np.asarray(self.problem.g(t, s, yi), float).reshape(-1)
                         for s, yi in zip(ts, ys)])
        return np.trapezoid(vals, np.array(ts), axis=0)


class _Lawson:
    """Integrating-factor RK4 for ``y' = Ay + N(t, y)`` with cached propagators."""

    def __init__(self, A, rhs):
        self.A = A
        self.rhs = rhs
        self._cache: dict[float, tuple[np.ndarray, np.ndarray]] = {}

    def props(self, h):
        hit = self._cache.get(h)
        if hit is None:
            full, half = expm_many(self.A, np.array([h, 0.5 * h]))
            if len(self._cache) > 64:
                self._cache.clear()
            hit = self._cache[h] = (full, half)
        return hit

    def step(self, t, y, h):
        E, Eh = self.props(h)
        k1 = self.rhs(t, y)
        k2 = self.rhs(t + 0.5 * h, Eh @ (y + 0.5 * h * k1))
        k3 = self.rhs(t + 0.5 * h, Eh @ y + 0.5 * h * k2)
        k4 = self.rhs(t + h, E @ y + h * (Eh @ k3))
        return E @ y + (h / 6.0) * (E @ k1 + 2.0 * (Eh @ (k2 + k3)) + k4)


def evolve_semilinear(A, schedule: ImpulseSchedule, problem: VolterraProblem, y0, t_end: float,
                      step: StepConfig | None = None, *, t0: float = 0.0, t_eval=None,
                      samples_per_segment: int | None = None,
                      history: PiecewiseTrajectory | None = None) -> PiecewiseTrajectory:
    """Evolve ``y' = Ay + f(t, y, z)`` with impulses, ``z`` the Volterra argument.

    Exponential (Lawson) RK4: ``exp(Ah)`` is exact per step, only the nonlinearity is
    approximated. Steps are controlled by step doubling and always land on sample
    times. Samples are every accepted step unless ``t_eval`` or
    ``samples_per_segment`` is given. ``history`` supplies ``y`` on ``[0, t0]`` for the
    ``at_s`` reading when restarting at ``t0 > 0``.
    """
    A = as_matrix(A, "A")
    step = step or StepConfig()
    y = np.asarray(y0, dtype=float).reshape(-1).copy()
    if y.shape[0] != A.shape[0] or schedule.n != A.shape[0]:
        raise DimensionMismatch("state, generator and schedule dimensions differ")
    if t_end < t0:
        raise ReversedInterval(f"t_end={t_end} < t0={t0}")
    if problem.volterra_arg == "at_s" and t0 > 0 and history is None:
        raise ValueError("at_s evolution from t0 > 0 needs the history on [0, t0]")

    hist = _History(problem, history) if problem.volterra_arg == "at_s" else None

    def rhs(t, x):
        if hist is not None:
            z = hist.z(t, x)
        else:
            z = volterra_z(problem, t, x, schedule.times_between(0.0, t), step.quad_nodes)
        out = problem.F(t, x, z)
        if not np.all(np.isfinite(out)):
            raise NonFiniteState(f"non-finite right-hand side at t={t}")
        return out

    lawson = _Lawson(A, rhs)
    imps, edges = _breakpoints(schedule, t0, t_end)
    segments = []
    h = step.h
    n_steps = 0
    for j, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        if t_eval is not None or samples_per_segment is not None:
            targets = _segment_sample_times(a, b, samples_per_segment or 2, t_eval)
            record_all = False
        else:
            targets = np.array([a, b])
            record_all = True
        times, states = [a], [y.copy()]
        if hist is not None:
            hist.push(a, y)
        t = a
        for target in targets[1:]:
            while t < target:
                if n_steps >= step.max_steps:
                    raise StepFailure("maximum number of steps exceeded")
                hh = min(h, target - t)
                last = hh == target - t
                if step.adaptive:
                    full = lawson.step(t, y, hh)
                    mid = lawson.step(t, y, 0.5 * hh)
                    half = lawson.step(t + 0.5 * hh, mid, 0.5 * hh)
                    err = np.linalg.norm(half - full) / 15.0 / (1.0 + np.linalg.norm(half))
                    if not np.isfinite(err):
                        raise NonFiniteState(f"state blew up near t={t}")
                    if err > step.tol:
                        h = 0.5 * hh
                        if h < step.h_min:
                            raise StepFailure(f"step size underflow at t={t}")
                        continue
                    y_new = half
                    if err < step.tol / 32.0:
                        h = min(step.h, 2.0 * hh)
                    elif not last:
                        h = hh
                else:
                    y_new = lawson.step(t, y, hh)
                    if not np.all(np.isfinite(y_new)):
                        raise NonFiniteState(f"state blew up near t={t}")
                t = target if last else t + hh
                y = y_new
                n_steps += 1
                if hist is not None:
                    hist.push(t, y)
                if record_all and t < target:
                    times.append(t)
                    states.append(y.copy())
            times.append(t)
            states.append(y.copy())
        segments.append(Segment(np.array(times), np.array(states)))
        if j < len(imps):
            y = apply_jump(imps[j].B, imps[j].d, y)
            if hist is not None:
                hist.push(b, y)
    return PiecewiseTrajectory(segments, tuple(imp.time for imp in imps),
                               _terminal_jump(schedule, t_end, segments[-1].states[-1]),
                               {"steps": n_steps})


def periodicity_residual(traj: PiecewiseTrajectory, rho, omega: float) -> float:
    """``sup ||y(t + omega) - rho y(t)|| / (1 + ||y(t)||)`` over samples in the first period.

    Left limits are compared with left limits and right limits with right limits.
    """
    rho = as_matrix(rho, "rho")
    t0 = traj.t0
    if traj.t_end < t0 + 2 * omega - _TIME_MATCH * max(1.0, omega):
        raise ShortTrajectory(f"trajectory covers [{t0}, {traj.t_end}], need length {2 * omega}")
    worst = 0.0
    limit = t0 + omega * (1 + _TIME_MATCH)
    for t, side, y in traj.rows():
        if t > limit:
            break
        if side == "-":
            s = "R" if t == t0 else "L"
        else:
            s = side
        later = traj.value(t + omega, s)
        r = np.linalg.norm(later - rho @ y) / (1.0 + np.linalg.norm(y))
        worst = max(worst, float(r))
    return worst


def sampled_trajectory(times, states, jump_times=()) -> PiecewiseTrajectory:
    """Trajectory from dense samples; a repeated time marks (left, right) at a jump."""
    times = np.asarray(times, float)
    states = np.asarray(states, float).reshape(len(times), -1)
    segments, start = [], 0
    for i in range(1, len(times)):
        if times[i] == times[i - 1]:
            segments.append(Segment(times[start:i], states[start:i]))
            start = i
    segments.append(Segment(times[start:], states[start:]))
    jumps = tuple(float(s.times[0]) for s in segments[1:])
    return PiecewiseTrajectory(segments, jumps or tuple(jump_times))
