import math

import numpy as np
import pytest

from conftest import scalar_config, scalar_system
from orps.config import parse_config, picard_config, system_from_dict
from orps.corpus import certified_semilinear
from orps.errors import NoConvergence, PreconditionFailed
from orps.flow import ImpulseSchedule, VolterraProblem, sampled_trajectory
from orps.kernel import bound_report, kernel_sum_numeric
from orps.solver import (CollocationMesh, PicardConfig, contraction_certificate, estimate_lipschitz,
                         existence_ball, picard_apply, solve_linear_periodic, solve_semilinear_picard,
                         sup_norm_f0)
from orps.system import SystemSpec
from orps.verifier import shooting_oracle, validate_solution


def sine_system(eps=0.1, a=-1.0, rho=1.5, g=None, impulses=True):
    sched = ImpulseSchedule(1.0, [0.4] if impulses else [], [[[0.2]]] if impulses else [],
                            [[0.5]] if impulses else [], [[rho]])
    kappa = math.log(rho)
    # e^{kappa t} sin(e^{-kappa t} y) keeps f(t + 1, rho y) = rho f(t, y)
    prob = VolterraProblem(
        f=lambda t, y, z: eps * math.exp(kappa * t) * (np.sin(math.exp(-kappa * t) * y) + math.cos(2 * math.pi * t)),
        g=g, lipschitz_f=eps, lipschitz_g=0.0)
    return SystemSpec([[a]], sched, prob)


# --- linear -----------------------------------------------------------------------------------

def test_linear_scalar_impulse():
    tr = solve_linear_periodic(scalar_system(rho=3.0, impulses=[(0.5, 1.0, 1.0)]))
    assert tr.meta["y0"][0] == pytest.approx(1.0, rel=1e-15)
    assert tr.left_limit(0.5)[0] == pytest.approx(1.0, rel=1e-15)
    assert tr.value(1.0)[0] == pytest.approx(3.0, rel=1e-15)


def test_linear_rho2_forced():
    tr = solve_linear_periodic(scalar_system(rho=2.0, forcing="1"))
    ts = tr.sample_times()
    vals = np.array([y[0] for _, _, y in tr.rows()])
    assert np.max(np.abs(vals - (1 + ts)) / (1 + ts)) <= 1e-12


def test_linear_trivial():
    tr = solve_linear_periodic(scalar_system(a=-0.3, rho=2.0, impulses=[(0.5, 0.5, 0.0)]))
    assert tr.sup_norm() == 0.0


def test_linear_impulse_formula_random(rng):
    for _ in range(20):
        c = rng.uniform(1.5, 4.0)
        b = rng.uniform(-0.5, 0.4)
        d = rng.uniform(-1, 1)
        tr = solve_linear_periodic(scalar_system(rho=c, impulses=[(0.5, b, d)]))
        assert tr.meta["y0"][0] == pytest.approx(d / (c - 1 - b), rel=1e-13)


# --- solution operator ------------------------------------------------------------------------

def test_picard_apply_zero_nonlinearity_gives_impulse_sum():
    cfg = scalar_config(a=-0.5, rho=3.0, impulses=[(0.5, 1.0, 1.0)])
    cfg["nonlinearity"] = {"kind": "builtin", "name": "zero"}
    s = system_from_dict(cfg)
    y1 = sampled_trajectory(np.linspace(0, 1, 5), np.full((5, 1), 7.0))
    y2 = sampled_trajectory(np.linspace(0, 1, 5), np.full((5, 1), -3.0))
    r1, r2 = picard_apply(s, y1), picard_apply(s, y2)
    lin = solve_linear_periodic(scalar_system(a=-0.5, rho=3.0, impulses=[(0.5, 1.0, 1.0)]))
    for t in (0.0, 0.3, 0.5, 0.9):
        assert r1.value(t)[0] == pytest.approx(lin.value(t)[0], rel=1e-12)
        assert r2.value(t)[0] == pytest.approx(r1.value(t)[0], rel=1e-14)


def test_picard_apply_constant_forcing_equals_linear():
    cfg = scalar_config(a=-0.5, rho=2.0, impulses=[(0.3, 0.2, 0.1)])
    cfg["nonlinearity"] = {"kind": "polynomial", "f": {"const": [1.0]}}
    s = system_from_dict(cfg)
    r = picard_apply(s, sampled_trajectory([0.0, 1.0], [[0.0], [0.0]]))
    lin = solve_linear_periodic(scalar_system(a=-0.5, rho=2.0, impulses=[(0.3, 0.2, 0.1)], forcing="1"))
    for t in np.linspace(0, 1, 11):
        assert r.value(t)[0] == pytest.approx(lin.value(t)[0], rel=1e-11)


def test_picard_apply_fixed_point_rho2():
    s = scalar_system(rho=2.0, forcing="1")
    ts = np.linspace(0, 1, 33)
    y = sampled_trajectory(ts, (1 + ts)[:, None])
    r = picard_apply(s, y)
    for t in ts:
        assert r.value(t)[0] == pytest.approx(1 + t, rel=1e-13)


# --- Picard iteration -------------------------------------------------------------------------

def test_picard_linear_in_disguise():
    cfg = scalar_config(a=-0.5, rho=2.0, impulses=[(0.3, 0.2, 0.1)])
    cfg["nonlinearity"] = {"kind": "expression", "f": ["cos(2*pi*t)"]}
    s = system_from_dict(cfg)
    tr, log = solve_semilinear_picard(s, PicardConfig(tol=1e-12))
    # the first application of R already returns the fixed point
    level0 = [d for lv, d in zip(log.levels, log.distances) if lv == 0]
    assert level0[0] > 0.1 and max(level0[1:]) <= 1e-13
    lin = solve_linear_periodic(scalar_system(a=-0.5, rho=2.0, impulses=[(0.3, 0.2, 0.1)],
                                              forcing="cos(2*pi*t)"))
    for t in np.linspace(0, 1, 11):
        assert tr.value(t)[0] == pytest.approx(lin.value(t)[0], rel=1e-10, abs=1e-12)


def test_picard_matches_shooting_scalar_sine():
    s = sine_system()
    tr, log = solve_semilinear_picard(s, PicardConfig(tol=1e-12))
    assert log.converged
    y0 = shooting_oracle(s)
    assert tr.value(0.0)[0] == pytest.approx(y0[0], abs=1e-8)


def test_picard_rates_below_certificate():
    s = sine_system(eps=0.3)
    cert = contraction_certificate(s, 10.0)
    assert cert.contraction_ok
    _, log = solve_semilinear_picard(s, PicardConfig(tol=1e-11))
    rates = log.rates()
    assert rates and max(rates[1:]) <= cert.LC2 * 1.1


def test_picard_uniqueness_from_two_starts():
    s = sine_system(eps=0.4)
    a, _ = solve_semilinear_picard(s, PicardConfig(tol=1e-11))
    b, _ = solve_semilinear_picard(s, PicardConfig(tol=1e-11, init=lambda t: np.array([5.0 * math.sin(7 * t)])))
    ts = np.linspace(0, 1, 41)
    assert max(abs(a.value(t)[0] - b.value(t)[0]) for t in ts) <= 20 * 1e-11


def test_picard_no_convergence_reports_log():
    s = sine_system(eps=0.3)
    with pytest.raises(NoConvergence) as info:
        solve_semilinear_picard(s, PicardConfig(tol=1e-14, max_iter=3))
    assert info.value.log.iterations == 3


def test_picard_periodicity_after_convergence():
    s = sine_system(eps=0.2)
    tr, _ = solve_semilinear_picard(s, PicardConfig(tol=1e-11))
    rep = validate_solution(s, tr, tol=1e-9)
    assert rep.ok, rep.to_dict()


def test_collocation_mesh_refinement_indices():
    s = sine_system()
    coarse, fine = CollocationMesh(s, 2, 6), CollocationMesh(s, 4, 6)
    tc = np.concatenate(coarse.seg_out_times)[coarse.common_index()]
    tf = np.concatenate(fine.seg_out_times)[coarse.refined_common_index()]
    np.testing.assert_array_equal(tc, tf)


# --- certificates -----------------------------------------------------------------------------

def test_certificate_zero_nonlinearity():
    cfg = scalar_config(a=-0.5, rho=3.0, impulses=[(0.5, 1.0, 1.0)])
    cfg["nonlinearity"] = {"kind": "builtin", "name": "zero"}
    s = system_from_dict(cfg)
    cert = contraction_certificate(s, 1.0)
    assert cert.L == 0.0 and cert.contraction_ok
    assert cert.norm_bound == pytest.approx(cert.C1)
    assert cert.f0 == 0.0


def test_certificate_L_reading():
    s = sine_system(eps=0.2, g=lambda t, s, y: 0.5 * y)
    prob = s.problem
    from dataclasses import replace
    s = SystemSpec(s.A, s.schedule, replace(prob, lipschitz_g=0.5))
    cert = contraction_certificate(s, 1.0)
    assert cert.L == pytest.approx(0.2 * (1 + 0.5))
    assert cert.M1 == pytest.approx(0.2)
    assert cert.L == pytest.approx(cert.L_f + cert.M1 * cert.L_g)


def test_certificate_flags_independent():
    cfg = certified_semilinear(np.random.default_rng(3), 1.2, kind="betaC2")
    s = system_from_dict(cfg)
    cert = contraction_certificate(s, cfg["nu"])
    assert cert.beta * cert.C2 == pytest.approx(1.2)
    assert not cert.schauder_ok and cert.ball_radius_l is None
    with pytest.raises(PreconditionFailed):
        existence_ball(s, cert)


def test_estimated_lipschitz_sine():
    prob = VolterraProblem(f=lambda t, y, z: 0.3 * np.sin(y))
    s = SystemSpec([[-1.0]], ImpulseSchedule.empty(1.0, [[2.0]]), prob)
    Lf, Lg = estimate_lipschitz(s, 1.0, samples=200, seed=0)
    assert Lg == 0.0
    assert 0.3 * 1.5 * math.cos(1.0) <= Lf <= 0.3 * 1.5 * (1 + 1e-6)
    cert = contraction_certificate(s, 1.0)
    assert cert.lipschitz_source == "estimated"


def test_sup_norm_f0():
    s = sine_system(eps=0.1)
    assert sup_norm_f0(s) == pytest.approx(0.1 * 1.5, rel=1e-6)


def test_ball_zero_nonlinearity():
    cfg = scalar_config(a=-0.5, rho=3.0, impulses=[(0.5, 1.0, 1.0)])
    cfg["nonlinearity"] = {"kind": "builtin", "name": "zero"}
    s = system_from_dict(cfg)
    cert = contraction_certificate(s, 1.0)
    assert cert.ball_radius_l == pytest.approx(cert.C1)
    rep = existence_ball(s, cert, samples=20)
    assert rep.ok
    assert max(kernel_sum_numeric(s, t) for t in np.linspace(0, 1, 65)) <= cert.C1


def test_ball_bounded_nonlinearity():
    prob = VolterraProblem(f=lambda t, y, z: 0.5 * np.cos(y + t), lipschitz_f=0.5, lipschitz_g=0.0,
                           growth_alpha=0.5, growth_beta=0.0)
    s = SystemSpec([[-1.0]], ImpulseSchedule(1.0, [0.5], [[[0.3]]], [[0.2]], [[1.0]]), prob)
    cert = contraction_certificate(s, 1.0)
    assert cert.ball_radius_l == pytest.approx(0.5 * cert.C2 + cert.C1)
    assert existence_ball(s, cert, samples=100).ok


def test_certificate_norm_bound_holds():
    cfg = certified_semilinear(np.random.default_rng(5), 0.6)
    s = system_from_dict(cfg)
    cert = contraction_certificate(s, cfg["nu"])
    tr, _ = solve_semilinear_picard(s, picard_config(parse_config(cfg)))
    assert tr.sup_norm() <= cert.norm_bound * 1.01
    assert cert.nu_consistent == (cert.norm_bound <= cfg["nu"])
    assert bound_report(s).C2 == cert.C2
