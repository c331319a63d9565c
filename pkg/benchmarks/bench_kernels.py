"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Micro benchmarks call both kernel modules directly. The end-to-end Picard solve runs in
a subprocess per backend, since the backend is chosen once at import time.
"""
from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from orps import _pykernels

try:
    from orps import _ckernels
except ImportError:
    _ckernels = None

SOLVE_SNIPPET = """
import time
from orps import BACKEND
from orps.config import system_from_dict
from orps.corpus import certified_semilinear
from orps.solver import PicardConfig, solve_semilinear_picard
import numpy as np
rng = np.random.default_rng(11)
systems = [system_from_dict(certified_semilinear(rng, 0.6, "LC2", n=3, m=2)) for _ in range(3)]
t0 = time.perf_counter()
for s in systems:
    solve_semilinear_picard(s, PicardConfig(tol=1e-10))
print(BACKEND, time.perf_counter() - t0)
"""


def _best(fn, repeat: int, number: int) -> float:
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def micro(repeat: int) -> list[tuple[str, float, float | None]]:
    rng = np.random.default_rng(0)
    A = rng.standard_normal((4, 4))
    ts = rng.uniform(0.0, 2.0, 512)
    M = rng.standard_normal((512, 4, 4))
    Phi = rng.standard_normal((2000, 3, 3)) * 0.3
    c = rng.standard_normal((2000, 3))
    u0 = np.zeros(3)
    cases = [
        ("expm_batch 512 x 4x4", lambda mod: mod.expm_batch(A, ts)),
        ("spectral_norm_batch 512 x 4x4", lambda mod: mod.spectral_norm_batch(M)),
        ("affine_sweep 2000 x 3", lambda mod: mod.affine_sweep(Phi, c, u0)),
    ]
    rows = []
    for name, call in cases:
        py = _best(lambda: call(_pykernels), repeat, 20)
        cy = _best(lambda: call(_ckernels), repeat, 20) if _ckernels is not None else None
        rows.append((name, py, cy))
    return rows


def end_to_end() -> dict[str, float]:
    out = {}
    for flag in ("1", "0"):
        env = dict(os.environ, ORPS_PURE_PYTHON=flag)
        proc = subprocess.run([sys.executable, "-c", SOLVE_SNIPPET], env=env, capture_output=True,
                              text=True, check=True)
        backend, seconds = proc.stdout.split()
        out[backend] = float(seconds)
    return out


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    print(f"{'kernel':34s} {'numpy [ms]':>11s} {'cython [ms]':>12s} {'speedup':>8s}")
    for name, py, cy in micro(args.repeat):
        cy_txt = f"{cy * 1e3:12.3f}" if cy is not None else f"{'n/a':>12s}"
        sp = f"{py / cy:8.1f}" if cy else f"{'n/a':>8s}"
        print(f"{name:34s} {py * 1e3:11.3f} {cy_txt} {sp}")
    e2e = end_to_end()
    py, cy = e2e.get("python"), e2e.get("cython")
    line = f"{'Picard solve, 3 systems [s]':34s} {py:11.3f}"
    if cy is not None:
        line += f" {cy:12.3f} {py / cy:8.1f}"
    print(line)


if __name__ == "__main__":
    main()
