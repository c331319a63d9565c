"""``orps solve|bounds|verify|sweep``.

Exit codes: 0 success, 1 configuration or file-format error, 2 no convergence or failed
validation, 3 failed assumption check (``solve`` only, unless ``--force``), 4 singular gap
(``bounds``).
"""
from __future__ import annotations

import argparse
import copy
import csv
import itertools
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import catalog
from .config import build_system, load_config, parse_config, picard_config
from .errors import (ConfigParse, LipschitzEstimateUnstable, NoConvergence, OrpsError,
                     SchemaMismatch, SingularGap)
from .io import dumps, read_trajectory_csv, write_json, write_trajectory_csv
from .kernel import bound_report, commutation_residual, numeric_maxima
from .solver import (CollocationMesh, contraction_certificate, solve_linear_periodic,
                     solve_semilinear_picard)
from .verifier import check_assumptions, validate_solution

log = logging.getLogger("orps")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVE, EXIT_ASSUMPTION, EXIT_SINGULAR = 0, 1, 2, 3, 4
_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


def _setup_logging() -> None:
    level = _LEVELS.get(os.environ.get("ORPS_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _raw_config(args) -> dict:
    if args.problem:
        try:
            raw = catalog.get(args.problem)
        except KeyError as exc:
            raise ConfigParse(str(exc.args[0])) from exc
    elif args.config:
        raw = load_config(args.config).raw
    else:
        raise ConfigParse("one of --config or --problem is required")
    if args.seed is not None:
        raw["seed"] = args.seed
    return raw


def _validation_tol(solver_tol: float) -> float:
    return max(1e-8, 100.0 * solver_tol)


def _iterate_only(sys_, pcfg, count: int):
    # finest mesh the refinement loop could reach, so results compare with a full solve
    mesh = CollocationMesh(sys_, pcfg.grid * 2 ** pcfg.max_refine, pcfg.quad_nodes)
    Y = np.zeros((mesh.n_states, sys_.n))
    dists = []
    for _ in range(count):
        Y_new = mesh.periodic_response(mesh.forcing(mesh.node_values(Y)))
        dists.append(float(np.max(np.linalg.norm(Y_new - Y, axis=1))))
        Y = Y_new
    return mesh.to_trajectory(Y), dists


def _certificate(sys_, cfg, seed: int) -> dict:
    try:
        return contraction_certificate(sys_, cfg.nu, seed=seed).to_dict()
    except LipschitzEstimateUnstable as exc:
        return {"error": str(exc)}


def run_solve(raw: dict, out: Path, *, force: bool = False, iterate_only: int | None = None) -> tuple[int, dict]:
    """Solve one configuration; writes ``trajectory.csv`` and ``report.json`` into ``out``."""
    cfg = parse_config(raw)
    sys_ = build_system(cfg)
    report: dict = {"problem": sys_.describe(), "seed": cfg.seed}
    assumptions = check_assumptions(sys_, seed=cfg.seed)
    report["assumptions"] = assumptions.to_dict()
    out.mkdir(parents=True, exist_ok=True)
    if not assumptions.overall and not force:
        report["status"] = "assumption_failure"
        report["exit_code"] = EXIT_ASSUMPTION
        write_json(report, out / "report.json")
        return EXIT_ASSUMPTION, report
    try:
        pcfg = picard_config(cfg)
        report["certificate"] = _certificate(sys_, cfg, cfg.seed)
        if iterate_only is not None:
            traj, dists = _iterate_only(sys_, pcfg, iterate_only)
            report["iteration_log"] = {"distances": dists, "iterations": len(dists), "mode": "iterate_only"}
        elif sys_.is_linear:
            traj = solve_linear_periodic(sys_)
            report["iteration_log"] = {"iterations": 0, "mode": "linear_boundary_solve"}
        else:
            traj, clog = solve_semilinear_picard(sys_, pcfg)
            report["iteration_log"] = clog.to_dict()
    except NoConvergence as exc:
        report["status"] = "no_convergence"
        report["error"] = str(exc.args[0])
        if exc.log is not None:
            report["iteration_log"] = exc.log.to_dict()
        report["exit_code"] = EXIT_SOLVE
        write_json(report, out / "report.json")
        return EXIT_SOLVE, report
    except SingularGap as exc:
        report["status"] = "singular_gap"
        report["error"] = str(exc)
        report["exit_code"] = EXIT_SOLVE
        write_json(report, out / "report.json")
        return EXIT_SOLVE, report
    write_trajectory_csv(traj, out / "trajectory.csv")
    # validate what was written, so the report describes the file on disk
    written = read_trajectory_csv(out / "trajectory.csv", sys_.n)
    validation = validate_solution(sys_, written, tol=_validation_tol(pcfg.tol))
    report["validation"] = validation.to_dict()
    ok = validation.ok or iterate_only is not None
    report["status"] = "ok" if ok else "validation_failure"
    report["exit_code"] = EXIT_OK if ok else EXIT_SOLVE
    write_json(report, out / "report.json")
    return report["exit_code"], report


def run_bounds(raw: dict, out: Path, points: int = 64) -> tuple[int, dict]:
    cfg = parse_config(raw)
    sys_ = build_system(cfg)
    out.mkdir(parents=True, exist_ok=True)
    report: dict = {"problem": sys_.describe()}
    try:
        res = commutation_residual(sys_)
        for variant in ("general", "commuting"):
            br = bound_report(sys_, variant=variant)
            nm = numeric_maxima(sys_, points, variant=variant)
            report[variant] = {
                "bounds": br.to_dict(),
                "numeric": {"integral_max": nm.integral_max, "integral_argmax": nm.integral_argmax,
                            "sum_max": nm.sum_max, "sum_argmax": nm.sum_argmax, "grid_points": nm.grid_points},
                "margin_C1": br.C1 - nm.sum_max,
                "margin_C2": br.C2 - nm.integral_max,
            }
        report["commutation_residual"] = res
        report["commuting_applicable"] = bool(res <= 1e-8)
        report["status"] = "ok"
        report["exit_code"] = EXIT_OK
    except SingularGap as exc:
        report["status"] = "singular_gap"
        report["error"] = str(exc)
        report["exit_code"] = EXIT_SINGULAR
    write_json(report, out / "bounds.json")
    return report["exit_code"], report


def run_verify(raw: dict, trajectory: Path, out: Path) -> tuple[int, dict]:
    cfg = parse_config(raw)
    sys_ = build_system(cfg)
    traj = read_trajectory_csv(trajectory, sys_.n)
    pcfg = picard_config(cfg)
    out.mkdir(parents=True, exist_ok=True)
    validation = validate_solution(sys_, traj, tol=_validation_tol(pcfg.tol))
    report = {"problem": sys_.describe(), "trajectory": trajectory.name, "validation": validation.to_dict(),
              "status": "ok" if validation.ok else "validation_failure",
              "exit_code": EXIT_OK if validation.ok else EXIT_SOLVE}
    write_json(report, out / "verify.json")
    return report["exit_code"], report


# --- sweep ----------------------------------------------------------------------------------


def set_path(obj: dict, path: str, value) -> None:
    """Assign ``value`` at a dotted path; integer parts index lists (``rho.0.0``)."""
    parts = path.split(".")
    cur = obj
    for i, part in enumerate(parts):
        last = i == len(parts) - 1
        if isinstance(cur, list):
            try:
                idx = int(part)
                cur[idx]
            except (ValueError, IndexError) as exc:
                raise ConfigParse(f"sweep key {path!r}: bad list index {part!r}") from exc
            if last:
                cur[idx] = value
            else:
                cur = cur[idx]
        elif isinstance(cur, dict):
            if last:
                cur[part] = value
            else:
                cur = cur.setdefault(part, {})
        else:
            raise ConfigParse(f"sweep key {path!r}: {part!r} is not inside an object or list")


def _apply_point(raw: dict, point: dict) -> dict:
    cfg = copy.deepcopy(raw)
    for key, value in point.items():
        if key == "rho_scale":
            cfg["rho"] = (np.asarray(cfg["rho"], dtype=float).reshape(cfg["n"], cfg["n"]) * value).tolist()
        else:
            set_path(cfg, key, value)
    return cfg


def parse_sweep(spec: str) -> dict[str, list[float]]:
    """Sweep grid from a JSON file path or an inline JSON object ``{"key": [values]}``."""
    text = Path(spec).read_text(encoding="utf-8") if os.path.exists(spec) else spec
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParse(f"sweep: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(obj, dict) or not obj:
        raise ConfigParse("sweep: expected a non-empty object of key -> list of values")
    grid = {}
    for key, values in obj.items():
        if not isinstance(values, list) or not values:
            raise ConfigParse(f"sweep.{key}: expected a non-empty list")
        for v in values:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigParse(f"sweep.{key}: values must be numbers")
        grid[key] = [float(v) for v in values]
    return grid


def sweep_point(raw: dict, point: dict) -> dict:
    row = dict(point)
    row.update({"LC2": float("nan"), "betaC2": float("nan"), "converged": False, "iterations": 0,
                "residual": float("nan"), "status": "ok"})
    try:
        cfg = parse_config(_apply_point(raw, point))
        sys_ = build_system(cfg)
        try:
            cert = contraction_certificate(sys_, cfg.nu, seed=cfg.seed)
            row["LC2"], row["betaC2"] = cert.LC2, cert.bounds.C2 * cert.beta
        except LipschitzEstimateUnstable:
            row["status"] = "lipschitz_unstable"
        if sys_.is_linear:
            traj = solve_linear_periodic(sys_)
            row["converged"] = True
            row["residual"] = validate_solution(sys_, traj).periodicity
        else:
            _, clog = solve_semilinear_picard(sys_, picard_config(cfg))
            row["converged"], row["iterations"] = True, clog.iterations
            row["residual"] = clog.distances[-1]
    except NoConvergence as exc:
        row["status"] = "no_convergence"
        if exc.log is not None and exc.log.distances:
            row["iterations"], row["residual"] = exc.log.iterations, exc.log.distances[-1]
    except SingularGap:
        row["status"] = "singular_gap"
    except ConfigParse as exc:
        row["status"] = f"config_error: {exc}"
    except (OrpsError, FloatingPointError, OverflowError) as exc:
        row["status"] = type(exc).__name__
    return row


def run_sweep(raw: dict, grid: dict[str, list[float]], out: Path, jobs: int = 1) -> tuple[int, list[dict]]:
    parse_config(raw)
    keys = list(grid)
    points = [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(sweep_point, [raw] * len(points), points))
    else:
        rows = [sweep_point(raw, p) for p in points]
    out.mkdir(parents=True, exist_ok=True)
    header = keys + ["LC2", "betaC2", "converged", "iterations", "residual", "status"]
    with open(out / "sweep.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(row[k])) if isinstance(row[k], float) else
                        str(row[k]).lower() if isinstance(row[k], bool) else row[k] for k in header])
    return EXIT_OK, rows


# --- entry point ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="orps", description="(omega, rho)-periodic solutions of impulsive systems")
    p.add_argument("command", choices=["solve", "bounds", "verify", "sweep", "catalog"])
    p.add_argument("--config", help="JSON problem file (schema 1)")
    p.add_argument("--problem", help="catalog problem name instead of --config")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--jobs", type=int, default=1, help="parallel sweep workers")
    p.add_argument("--seed", type=int, default=None, help="override the configuration seed")
    p.add_argument("--force", action="store_true", help="solve even if an assumption check fails")
    p.add_argument("--iterate-only", type=int, default=None, metavar="N",
                   help="apply the solution operator N times from zero on the finest mesh instead of solving")
    p.add_argument("--trajectory", help="trajectory CSV for verify (default OUT/trajectory.csv)")
    p.add_argument("--sweep", help="sweep grid: JSON file or inline JSON object")
    p.add_argument("--points", type=int, default=64, help="t-grid size for bounds")
    return p


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    try:
        if args.command == "catalog":
            sys.stdout.write("\n".join(catalog.names()) + "\n")
            return EXIT_OK
        raw = _raw_config(args)
        if args.command == "solve":
            if args.iterate_only is not None and args.iterate_only < 1:
                raise ConfigParse("--iterate-only must be at least 1")
            code, report = run_solve(raw, out, force=args.force, iterate_only=args.iterate_only)
        elif args.command == "bounds":
            code, report = run_bounds(raw, out, args.points)
        elif args.command == "verify":
            traj = Path(args.trajectory) if args.trajectory else out / "trajectory.csv"
            if not traj.exists():
                raise SchemaMismatch(f"trajectory file {traj} not found")
            code, report = run_verify(raw, traj, out)
        else:
            if not args.sweep:
                raise ConfigParse("sweep needs --sweep")
            code, _ = run_sweep(raw, parse_sweep(args.sweep), out, max(1, args.jobs))
            report = None
    except (ConfigParse, SchemaMismatch) as exc:
        log.error("%s", exc)
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG
    if report is not None:
        summary = {"status": report["status"], "exit_code": report["exit_code"]}
        sys.stdout.write(dumps(summary))
    return code


if __name__ == "__main__":
    raise SystemExit(main())
