"""Seeded generators of problem configurations for tests, benchmarks and sweeps.

Every generator returns a plain JSON-compatible dict (schema 1), so generated problems go
through the same parsing path as user configurations.
"""
from __future__ import annotations

import math

import numpy as np

from .semigroup import expm, log_norm, opnorm

BRANCHES = ("neg", "zero", "pos")


def _lst(a) -> list:
    return np.asarray(a, dtype=float).tolist()


def _forcing_exprs(rng, n: int, omega: float) -> list[str]:
    out = []
    for _ in range(n):
        a, b, c = (float(v) for v in rng.uniform(-1.0, 1.0, 3))
        k1, k2 = (int(v) for v in rng.integers(1, 4, 2))
        w1, w2 = 2 * math.pi * k1 / omega, 2 * math.pi * k2 / omega
        out.append(f"{a!r}*sin({w1!r}*t) + {b!r}*cos({w2!r}*t) + {c!r}")
    return out


def _taus(rng, m: int, omega: float) -> list[float]:
    while True:
        taus = np.sort(rng.uniform(0.05 * omega, 0.95 * omega, m))
        if m < 2 or np.min(np.diff(taus)) > 0.05 * omega:
            return [float(t) for t in taus]


def _gap_cond(A, omega, Bs, rho) -> float:
    n = A.shape[0]
    P = np.eye(n)
    for B in Bs:
        P = (np.eye(n) + B) @ P
    gap = rho - expm(A, omega) @ P
    s = np.linalg.svd(gap, compute_uv=False)
    return s[0] / s[-1] if s[-1] > 0 else math.inf


def commuting_family(rng, n: int = 3, m: int = 2, omega: float = 1.0, branch: str | None = None,
                     forcing: bool = True, rho_range=(0.3, 3.0), max_cond: float = 1e6) -> dict:
    """Linear problem whose operators are all polynomials in one matrix ``S``.

    ``branch`` fixes the sign of the logarithmic norm of ``A`` ("neg", "zero", "pos").
    For "zero" ``S`` is skew-symmetric and ``A`` a multiple of ``S``, so the symmetric part
    of ``A`` vanishes exactly.
    """
    branch = branch or BRANCHES[int(rng.integers(3))]
    for _ in range(200):
        X = rng.standard_normal((n, n)) / math.sqrt(n)
        if branch == "zero":
            S = 0.5 * (X - X.T)
            A = float(rng.uniform(0.5, 2.0)) * S
        else:
            S = X
            A = rng.uniform(-1, 1) * np.eye(n) + rng.uniform(-1, 1) * S + 0.3 * rng.uniform(-1, 1) * (S @ S)
            target = rng.uniform(0.2, 1.5) * (1 if branch == "pos" else -1)
            A = A + (target - log_norm(A)) * np.eye(n)
        Bs = [rng.uniform(-0.4, 0.8) * np.eye(n) + rng.uniform(-0.3, 0.3) * S for _ in range(m)]
        r0 = rng.uniform(*rho_range) * (1 if rng.uniform() < 0.85 else -1)
        rho = r0 * np.eye(n) + rng.uniform(-0.2, 0.2) * abs(r0) * S
        if np.linalg.svd(rho, compute_uv=False)[-1] < 0.05:
            continue
        if _gap_cond(A, omega, Bs, rho) < max_cond:
            break
    else:
        raise RuntimeError("could not draw a well-conditioned commuting family")
    taus = _taus(rng, m, omega)
    cfg = {
        "schema": 1, "name": f"commuting-{branch}", "n": n, "omega": omega,
        "A": _lst(A), "rho": _lst(rho),
        "impulses": [{"tau": t, "B": _lst(B), "d": _lst(rng.uniform(-1, 1, n))} for t, B in zip(taus, Bs)],
        "nonlinearity": {"kind": "none"},
    }
    if forcing:
        cfg["nonlinearity"]["forcing"] = _forcing_exprs(rng, n, omega)
    return cfg


def bound_corpus(seed: int, count: int = 100) -> list[dict]:
    """Unrestricted linear systems satisfying A1-A4, cycling through the growth branches."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        n = int(rng.integers(1, 5))
        m = int(rng.integers(0, 4))
        out.append(commuting_family(rng, n, m, float(rng.uniform(0.5, 2.0)), BRANCHES[k % 3], forcing=False))
    return out


def certified_semilinear(rng, target: float, kind: str = "LC2", n: int | None = None,
                         m: int | None = None, omega: float = 1.0, volterra: bool = True) -> dict:
    """Semilinear problem with the scaled sine nonlinearity tuned so ``L*C2`` or ``beta*C2`` equals ``target``.

    Jumps are ``b_k E`` with ``b_k >= 0`` and ``rho = c E`` with ``c >= 1.2``; the growth
    constants of the builtin are exact, so the certified product is exactly ``target``.
    Jump offsets are scaled so that ``C1 <= 1``.
    """
    from .config import system_from_dict
    from .kernel import bound_report

    n = n or int(rng.integers(1, 4))
    m = int(rng.integers(0, 4)) if m is None else m
    for _ in range(200):
        A = rng.standard_normal((n, n)) * 0.8 / math.sqrt(n) - rng.uniform(0.0, 1.0) * np.eye(n)
        c = float(rng.uniform(1.2, 3.0))
        Bs = [float(rng.uniform(0.0, 0.6)) * np.eye(n) for _ in range(m)]
        if _gap_cond(A, omega, Bs, c * np.eye(n)) < 1e4:
            break
    K = rng.standard_normal((n, n)) / math.sqrt(n)
    K2 = rng.standard_normal((n, n)) * 0.3 / math.sqrt(n)
    W = rng.standard_normal((n, n)) * 0.5 / math.sqrt(n) if volterra else np.zeros((n, n))
    p = float(rng.uniform(0.0, 0.5)) if volterra else 0.0
    params = {"eps": 1.0, "K": _lst(K), "K2": _lst(K2), "W": _lst(W), "p": p,
              "b0": _lst(rng.uniform(-1, 1, n)), "b1": _lst(rng.uniform(-1, 1, n))}
    cfg = {
        "schema": 1, "name": f"certified-{kind}-{target}", "n": n, "omega": omega,
        "A": _lst(A), "rho": _lst(c * np.eye(n)),
        "impulses": [{"tau": t, "B": _lst(B), "d": _lst(rng.uniform(-1, 1, n))}
                     for t, B in zip(_taus(rng, m, omega), Bs)],
        "nonlinearity": {"kind": "builtin", "name": "scaled_sine", "params": params},
        "solver": {"tol": 1e-11},
    }
    sys = system_from_dict(cfg)
    rep = bound_report(sys)
    if rep.C1 > 1.0:
        # keep the solution O(1) so that sin(K y) stays resolvable on a modest mesh
        for imp in cfg["impulses"]:
            imp["d"] = _lst(np.array(imp["d"]) / rep.C1)
    C2 = rep.C2
    prob = sys.problem
    if kind == "LC2":
        unit = prob.lipschitz_f * (1.0 + omega * prob.lipschitz_g)
    elif kind == "betaC2":
        unit = prob.growth_beta
    else:
        raise ValueError(f"unknown kind {kind!r}")
    params["eps"] = float(target / (C2 * unit))
    cfg["nu"] = 1e3
    cfg["oracle"] = {kind: target}
    return cfg


def broken_system(rng, which: str) -> dict:
    """A linear system violating exactly the assumption ``which`` (A1, A2, A3 or A4)."""
    if which == "A3":
        n = 2
        while True:
            a = float(rng.uniform(-1, 0.5))
            B = rng.uniform(-0.5, 0.5, (2, 2))
            B[0, 1] = rng.choice([-1, 1]) * rng.uniform(0.2, 0.5)
            rho = np.diag(rng.uniform(1.5, 3.0, 2))
            rho[1, 1] = rho[0, 0] + rng.uniform(0.5, 1.0)
            A = a * np.eye(2)
            if _gap_cond(A, 1.0, [B], rho) < 1e6:
                break
        cfg = {"schema": 1, "name": "broken-A3", "n": n, "omega": 1.0, "A": _lst(A), "rho": _lst(rho),
               "impulses": [{"tau": float(rng.uniform(0.2, 0.8)), "B": _lst(B), "d": _lst(rng.uniform(-1, 1, 2))}],
               "nonlinearity": {"kind": "none", "forcing": _forcing_exprs(rng, 2, 1.0)}}
        return cfg
    if which == "A1":
        n = int(rng.integers(2, 4))
        while True:
            A = rng.standard_normal((n, n))
            B = rng.uniform(-0.5, 0.5, (n, n))
            c = float(rng.uniform(1.5, 3.0))
            res = opnorm(A @ B - B @ A) / max(1.0, opnorm(A) * opnorm(B))
            if res > 1e-3 and _gap_cond(A, 1.0, [B], c * np.eye(n)) < 1e6:
                break
        return {"schema": 1, "name": "broken-A1", "n": n, "omega": 1.0, "A": _lst(A), "rho": _lst(c * np.eye(n)),
                "impulses": [{"tau": 0.5, "B": _lst(B), "d": _lst(rng.uniform(-1, 1, n))}],
                "nonlinearity": {"kind": "none"}}
    n = int(rng.integers(1, 4))
    m = int(rng.integers(1, 4))
    cfg = commuting_family(rng, n, m, 1.0, rho_range=(1.2, 3.0))
    if which == "A4":
        A = np.array(cfg["A"])
        P = np.eye(n)
        for imp in cfg["impulses"]:
            P = (np.eye(n) + np.array(imp["B"])) @ P
        cfg["rho"] = _lst(expm(A, cfg["omega"]) @ P)
        cfg["name"] = "broken-A4"
        return cfg
    if which == "A2":
        rho = np.array(cfg["rho"])
        ext = []
        for imp in cfg["impulses"]:
            ext.append({"tau": imp["tau"] + cfg["omega"], "B": imp["B"], "d": _lst(rho @ np.array(imp["d"]))})
        k = int(rng.integers(len(ext)))
        mode = int(rng.integers(3))
        if mode == 0:
            ext[k]["d"] = _lst(np.array(ext[k]["d"]) + rng.choice([-1, 1]) * rng.uniform(0.05, 0.5))
        elif mode == 1:
            ext[k]["tau"] = ext[k]["tau"] + 0.01 * cfg["omega"]
        else:
            ext[k]["B"] = _lst(np.array(ext[k]["B"]) + 0.1 * np.eye(n))
        cfg["impulses"] = cfg["impulses"] + ext
        cfg["name"] = "broken-A2"
        return cfg
    raise ValueError(f"no generator for {which!r}")


def broken_corpus(seed: int, per_kind: int = 10) -> list[tuple[str, dict]]:
    rng = np.random.default_rng(seed)
    return [(which, broken_system(rng, which)) for which in ("A1", "A2", "A3", "A4") for _ in range(per_kind)]

