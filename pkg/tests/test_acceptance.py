"""Acceptance suite: one test and one summary line per criterion.

Run with ``pytest -m acceptance``; the verdict lines are printed in the terminal summary.
Tolerances are pinned in the module constants below and are not tuned per run.
"""
from __future__ import annotations

import dataclasses
import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from orps import catalog
from orps.config import system_from_dict
from orps.corpus import bound_corpus, broken_corpus, certified_semilinear, commuting_family
from orps.flow import (ImpulseSchedule, StepConfig, concatenate, evolve_linear, evolve_semilinear,
                       periodicity_residual)
from orps.io import read_trajectory_csv
from orps.kernel import _FORMULAS, bound_report, kernel_H, kernel_H_commuting, kernel_solution, numeric_maxima
from orps.quadrature import QuadratureConfig
from orps.semigroup import estimate_growth, expm, opnorm
from orps.solver import (PicardConfig, contraction_certificate, existence_ball, solve_linear_periodic,
                         solve_semilinear_picard)
from orps.verifier import check_assumptions, extend_by_simulation

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]

ORACLE_REL = 1e-8          # 1: relative sup-norm error against closed forms
ORACLE_SECONDS = 1.0
ENDPOINT_REL = 1e-7        # 2: ||y(omega) - rho y(0)|| <= ENDPOINT_REL (1 + ||y(0)||)
PERIODIC = 1e-6            # 2: residual of the re-simulated extension
CERTIFIED_SECONDS = 60.0
KERNEL_VS_SOLVE = 1e-7     # 3: sup-norm, absolute
KERNEL_VARIANTS = 1e-10    # 3: general vs commuting kernel, absolute
BOUND_REL = 1e-6           # 4: numeric maximum may exceed a bound by this relative margin
RATE_FACTOR = 1.1          # 5
NORM_FACTOR = 1.01         # 5
UNIQUE_FACTOR = 20.0       # 5: two starts agree within this multiple of tol
BALL_TOL = 1e-9            # 6
SEMIGROUP_REL = 1e-12      # 7
COMPOSITION_REL = 1e-12    # 7
JUMP_REL = 1e-14           # 7: per unit of max(1, ||y+||), i.e. rounding level


def _rel_sup(got, want) -> float:
    got, want = np.asarray(got, float), np.asarray(want, float)
    return float(np.max(np.abs(got - want)) / np.max(np.abs(want)))


# --- 1 ----------------------------------------------------------------------------------------


@pytest.mark.criterion(1)
def test_criterion_1_closed_form_oracles(verdict):
    errors, times = {}, {}

    t0 = time.perf_counter()
    s = system_from_dict(catalog.get("scalar-rho2-forced"))
    tr = solve_linear_periodic(s)
    rows = list(tr.rows())
    errors["rho2"] = _rel_sup([y[0] for _, _, y in rows], [1.0 + t for t, _, _ in rows])
    times["rho2"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    cfg = catalog.get("scalar-impulse")
    s = system_from_dict(cfg)
    c, b, d = cfg["rho"][0][0], cfg["impulses"][0]["B"][0][0], cfg["impulses"][0]["d"][0]
    y0 = d / (c - 1.0 - b)
    tr = solve_linear_periodic(s)
    want = [y0 if (t < 0.5 or (t == 0.5 and side == "L")) else (1 + b) * y0 + d for t, side, _ in tr.rows()]
    errors["impulse"] = _rel_sup([y[0] for _, _, y in tr.rows()], want)
    times["impulse"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    cfg = catalog.get("volterra-gauss")
    s = system_from_dict(cfg)
    lam = cfg["oracle"]["lambda"]
    tr = evolve_semilinear(s.A, s.schedule, s.problem, [1.0], s.omega, StepConfig(tol=1e-12),
                           t_eval=np.linspace(0.0, 1.0, 101))
    rows = list(tr.rows())
    errors["volterra"] = max(_rel_sup([y[0] for _, _, y in rows], [math.exp(lam * t * t / 2) for t, _, _ in rows]),
                             abs(tr.value(1.0)[0] - s.rho[0, 0] * 1.0) / 2.0)
    times["volterra"] = time.perf_counter() - t0

    ok = all(e <= ORACLE_REL for e in errors.values()) and all(t < ORACLE_SECONDS for t in times.values())
    detail = ", ".join(f"{k}: err {errors[k]:.1e} in {times[k]:.2f}s" for k in errors)
    assert verdict(ok, detail), detail


# --- 2 ----------------------------------------------------------------------------------------


@pytest.mark.criterion(2)
def test_criterion_2_certified_periodicity(verdict):
    rng = np.random.default_rng(2002)
    t0 = time.perf_counter()
    worst_end = worst_per = 0.0
    failures = []
    for k in range(50):
        cfg = certified_semilinear(rng, float(rng.uniform(0.1, 0.9)), "LC2")
        s = system_from_dict(cfg)
        tr, clog = solve_semilinear_picard(s, PicardConfig(tol=1e-11))
        y0 = tr.value(0.0, "R")
        end = float(np.linalg.norm(tr.left_limit(s.omega) - s.rho @ y0))
        ext = extend_by_simulation(s, tr)
        per = periodicity_residual(ext, s.rho, s.omega)
        worst_end = max(worst_end, end / (1.0 + np.linalg.norm(y0)))
        worst_per = max(worst_per, per)
        if not clog.converged or end > ENDPOINT_REL * (1 + np.linalg.norm(y0)) or per > PERIODIC:
            failures.append(k)
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < CERTIFIED_SECONDS
    detail = (f"50 systems, worst endpoint {worst_end:.1e}, worst periodicity {worst_per:.1e}, "
              f"{elapsed:.1f}s, failures {failures}")
    assert verdict(ok, detail), detail


# --- 3 ----------------------------------------------------------------------------------------


@pytest.mark.criterion(3)
def test_criterion_3_kernel_correctness(verdict):
    rng = np.random.default_rng(3003)
    worst = 0.0
    for _ in range(25):
        n, m = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        cfg = commuting_family(rng, n, m, float(rng.uniform(0.5, 2.0)))
        # the general kernel needs A and B_k to commute; rho is made generic
        rho = np.array(cfg["rho"]) + 0.3 * rng.standard_normal((n, n))
        if np.linalg.svd(rho, compute_uv=False)[-1] < 0.1:
            rho += np.eye(n)
        cfg["rho"] = rho.tolist()
        s = system_from_dict(cfg)
        ts = np.linspace(0.0, s.omega, 33)
        via_kernel = kernel_solution(s, ts)
        ref = solve_linear_periodic(s, t_eval=ts)
        want = np.array([ref.value(t) for t in ts])
        worst = max(worst, float(np.max(np.linalg.norm(via_kernel - want, axis=1))))

    worst_var = 0.0
    for _ in range(10):
        s = system_from_dict(commuting_family(rng, int(rng.integers(1, 5)), int(rng.integers(0, 4))))
        for t, tau in zip(rng.uniform(0, s.omega, 50), rng.uniform(0, s.omega, 50)):
            a, b = kernel_H(s, t, tau).value, kernel_H_commuting(s, t, tau).value
            worst_var = max(worst_var, float(np.max(np.abs(a - b))))
    ok = worst <= KERNEL_VS_SOLVE and worst_var <= KERNEL_VARIANTS
    detail = f"kernel vs boundary solve {worst:.1e} (25 systems), general vs commuting {worst_var:.1e}"
    assert verdict(ok, detail), detail


# --- 4 ----------------------------------------------------------------------------------------


def _window_sup(s) -> float:
    """Largest norm of a product of consecutive jump factors (and 1)."""
    F, best = s.impulse_factors, 1.0
    for a in range(s.m):
        W = np.eye(s.n)
        for k in range(a, s.m):
            W = F[k] @ W
            best = max(best, opnorm(W))
    return best


def _repairs(s, rep, which: str, value: float) -> list[str]:
    """Names of the bound repairs under which ``value`` is no longer a violation."""
    inp = rep.inputs
    sup = _window_sup(s)
    fixed = dataclasses.replace(inp, norm_P=max(inp.norm_P, sup), norm_P2=max(inp.norm_P2, sup * sup))
    out = []
    fn = _FORMULAS[rep.variant][0 if which == "C1" else 1]
    if value <= fn(fixed) * (1 + BOUND_REL):
        out.append("partial-products")
    if rep.variant == "general" and which == "C2" and inp.gamma < 0:
        lead = inp.M * max(inp.norm_P2, 1.0) * inp.norm_G
        c2 = (lead + max(inp.norm_P, 1.0)) * inp.M * math.expm1(inp.gamma * inp.omega) / inp.gamma
        if value <= c2 * (1 + BOUND_REL):
            out.append("gamma<0-lead")
    return out


@pytest.mark.criterion(4)
def test_criterion_4_bound_domination(verdict):
    quad = QuadratureConfig(tol=1e-9)
    violations, branches = [], {}
    for i, cfg in enumerate(bound_corpus(2024, 100)):
        s = system_from_dict(cfg)
        growth = estimate_growth(s.A, s.omega)
        branches[cfg["name"]] = branches.get(cfg["name"], 0) + 1
        for variant in ("general", "commuting"):
            rep = bound_report(s, growth, variant)
            num = numeric_maxima(s, 64, quad, variant=variant)
            for which, value, bound in (("C1", num.sum_max, rep.C1), ("C2", num.integral_max, rep.C2)):
                if value > bound * (1 + BOUND_REL):
                    name = which if variant == "general" else which + "'"
                    violations.append((i, name, value / bound, _repairs(s, rep, which, value)))

    # tightness witness: scalar, gamma = 0, rho = 2
    w = system_from_dict(catalog.get("scalar-rho2-forced"))
    w_rep = bound_report(w)
    w_num = numeric_maxima(w, 64)
    tight = w_rep.C2 == 2.0 and abs(w_num.integral_max - 2.0) <= 1e-12

    by_bound: dict[str, int] = {}
    for _, name, _, _ in violations:
        by_bound[name] = by_bound.get(name, 0) + 1
    unexplained = [v for v in violations if not v[3]]
    systems = sorted({v[0] for v in violations})
    ok = not violations and tight
    detail = (f"{len(violations)} violations on {len(systems)}/100 systems {by_bound}, "
              f"worst ratio {max((v[2] for v in violations), default=0):.3f}, "
              f"unexplained by the two repairs: {len(unexplained)}; "
              f"branches {branches}; scalar gamma=0 witness C2={w_rep.C2} numeric={w_num.integral_max:.15g}")
    assert verdict(ok, detail), detail


# --- 5 ----------------------------------------------------------------------------------------


@pytest.mark.criterion(5)
def test_criterion_5_contraction_certificate(verdict):
    rng = np.random.default_rng(5005)
    tol = 1e-11
    parts, ok = [], True
    for target in (0.3, 0.6, 0.9):
        s = system_from_dict(certified_semilinear(rng, target, "LC2"))
        cert = contraction_certificate(s, 1e3)
        a, clog = solve_semilinear_picard(s, PicardConfig(tol=tol, max_iter=400))
        start = lambda t: np.full(s.n, 3.0 * math.cos(5.0 * t))  # noqa: E731
        b, _ = solve_semilinear_picard(s, PicardConfig(tol=tol, max_iter=400, init=start))
        rate = max(clog.rates(), default=0.0)
        ts = np.linspace(0.0, s.omega, 201)
        gap = max(float(np.linalg.norm(a.value(t) - b.value(t))) for t in ts)
        norm = a.sup_norm()
        good = (abs(cert.LC2 - target) <= 1e-12 and clog.converged and rate <= RATE_FACTOR * cert.LC2
                and norm <= cert.norm_bound * NORM_FACTOR and gap <= UNIQUE_FACTOR * tol)
        ok &= good
        parts.append(f"LC2={target}: rate {rate:.3f}, |y| {norm:.3g} <= {cert.norm_bound:.3g}, starts {gap:.1e}")
    detail = "; ".join(parts)
    assert verdict(ok, detail), detail


# --- 6 ----------------------------------------------------------------------------------------


@pytest.mark.criterion(6)
def test_criterion_6_invariant_ball(verdict):
    rng = np.random.default_rng(6006)
    parts, ok = [], True
    for target in (0.5, 0.8):
        s = system_from_dict(certified_semilinear(rng, target, "betaC2"))
        cert = contraction_certificate(s, 1e3)
        rep = existence_ball(s, cert, 100, seed=6, tol=BALL_TOL)
        good = abs(cert.beta * cert.C2 - target) <= 1e-12 and rep.ok
        ok &= good
        parts.append(f"betaC2={target}: l {rep.l:.3g}, max ratio {rep.max_ratio:.4f}, "
                     f"violations {len(rep.violations)}/100")
    detail = "; ".join(parts)
    assert verdict(ok, detail), detail


# --- 7 ----------------------------------------------------------------------------------------


@pytest.mark.criterion(7)
def test_criterion_7_semigroup_and_flow(verdict):
    rng = np.random.default_rng(7007)
    worst_sg = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 7))
        A = rng.standard_normal((n, n))
        s, t = rng.uniform(0, 2, 2)
        lhs = expm(A, s + t)
        worst_sg = max(worst_sg, opnorm(lhs - expm(A, s) @ expm(A, t)) / (opnorm(expm(A, s)) * opnorm(expm(A, t))))

    worst_comp = worst_jump = 0.0
    for _ in range(50):
        n, m = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        omega = float(rng.uniform(0.5, 2.0))
        taus = np.sort(rng.uniform(0.05, 0.95, m)) * omega
        sched = ImpulseSchedule(omega, taus, rng.uniform(-0.4, 0.4, (m, n, n)), rng.standard_normal((m, n)),
                                float(rng.uniform(1.2, 2.5)) * np.eye(n))
        A = rng.standard_normal((n, n)) * 0.5
        c = rng.standard_normal(n)
        forcing = lambda t, c=c: c * math.cos(3.0 * t)  # noqa: E731
        y0 = rng.standard_normal(n)
        t_mid, t_end = sorted(rng.uniform(0.1, 2.5, 2) * omega)
        whole = evolve_linear(A, sched, y0, forcing, t_end)
        first = evolve_linear(A, sched, y0, forcing, t_mid)
        second = evolve_linear(A, sched, first.value(t_mid), forcing, t_end, t0=t_mid)
        joined = concatenate(first, second)
        scale = 1.0 + np.linalg.norm(whole.value(t_end))
        worst_comp = max(worst_comp, float(np.linalg.norm(joined.value(t_end) - whole.value(t_end))) / scale)
        for tau in whole.breakpoints:
            if not whole.is_jump(tau):
                continue
            imp = next(i for i in sched.between(0.0, t_end + omega) if i.time == tau)
            left, right = whole.left_limit(tau), whole.right_limit(tau)
            # the identity as stated: the jump Delta y equals B y + d
            err = np.max(np.abs((right - left) - (imp.B @ left + imp.d)))
            worst_jump = max(worst_jump, float(err / max(1.0, np.max(np.abs(right)))))
    ok = worst_sg <= SEMIGROUP_REL and worst_comp <= COMPOSITION_REL and worst_jump <= JUMP_REL
    detail = (f"semigroup law {worst_sg:.1e} (200 cases), flow composition {worst_comp:.1e} (50 systems), "
              f"jump identity {worst_jump:.1e}")
    assert verdict(ok, detail), detail


# --- 8 ----------------------------------------------------------------------------------------


@pytest.mark.criterion(8)
def test_criterion_8_assumption_verifier(verdict):
    corpus = broken_corpus(8008, 25)
    missed, extra = [], 0
    for k, (which, cfg) in enumerate(corpus):
        failed = check_assumptions(system_from_dict(cfg)).failed()
        if which not in failed:
            missed.append((k, which, failed))
        elif len(failed) > 1:
            extra += 1
    ok = not missed
    detail = (f"{len(corpus) - len(missed)}/{len(corpus)} flagged with the intended id "
              f"(A1, A2, A3, A4 x 25), {extra} with further ids, missed {missed}")
    assert verdict(ok, detail), detail


# --- 9 ----------------------------------------------------------------------------------------


def _cli(*args):
    return subprocess.run([sys.executable, "-m", "orps.cli", *args], capture_output=True, text=True)


@pytest.mark.criterion(9)
def test_criterion_9_cli_determinism(verdict, tmp_path):
    files = ("report.json", "trajectory.csv")
    outs, codes = [], []
    for name in ("a", "b"):
        proc = _cli("solve", "--problem", "sine-contractive", "--out", str(tmp_path / name), "--seed", "7")
        codes.append(proc.returncode)
        outs.append([(tmp_path / name / f).read_bytes() for f in files])
    identical = outs[0] == outs[1]
    proc = _cli("verify", "--problem", "sine-contractive", "--out", str(tmp_path / "a"))
    codes.append(proc.returncode)
    report = json.loads((tmp_path / "a" / "verify.json").read_text())
    read_trajectory_csv(tmp_path / "a" / "trajectory.csv", 1)
    ok = identical and codes == [0, 0, 0] and report["validation"]["ok"]
    detail = f"byte-identical {identical}, exit codes {codes}, verify ok {report['validation']['ok']}"
    assert verdict(ok, detail), detail
