"""The assembled impulsive system and its cached period data."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import DimensionMismatch
from .flow import ImpulseSchedule, VolterraProblem
from .semigroup import GapInverse, as_matrix, expm, invert_monodromy_gap, opnorm


@dataclass(frozen=True)
class SystemSpec:
    """``y' = Ay + f(t, y, z)`` (or ``+ forcing(t)``) with the impulses of ``schedule``.

    ``problem`` absent means the linear problem driven by ``forcing`` (``None`` = zero).
    Construction checks shapes only; assumption checks live in the verifier.
    """

    A: np.ndarray
    schedule: ImpulseSchedule
    problem: VolterraProblem | None = None
    forcing: Callable | None = None
    name: str = ""

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        object.__setattr__(self, "A", A)
        if self.schedule.n != A.shape[0]:
            raise DimensionMismatch(
                f"generator is {A.shape[0]}x{A.shape[0]} but schedule has dimension {self.schedule.n}")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.schedule.m

    @property
    def omega(self) -> float:
        return self.schedule.omega

    @property
    def rho(self) -> np.ndarray:
        return self.schedule.rho

    @property
    def is_linear(self) -> bool:
        return self.problem is None

    @cached_property
    def T_omega(self) -> np.ndarray:
        return expm(self.A, self.omega)

    @cached_property
    def impulse_factors(self) -> np.ndarray:
        """``E + B_k`` for the in-period impulses, shape (m, n, n)."""
        return np.eye(self.n)[None, :, :] + self.schedule.Bs

    @cached_property
    def full_product(self) -> np.ndarray:
        return self.window(0.0, self.omega)

    @cached_property
    def gap(self) -> GapInverse:
        return invert_monodromy_gap(self.rho, self.T_omega, self.full_product)

    @property
    def gap_inverse(self) -> np.ndarray:
        return self.gap.inverse

    @cached_property
    def _window_cache(self) -> dict:
        return {}

    def window_indices(self, s: float, t: float) -> tuple[int, int]:
        """In-period impulse index range ``[i0, i1)`` with ``s < tau_k < t``."""
        taus = self.schedule.taus
        return int(np.searchsorted(taus, s, "right")), int(np.searchsorted(taus, t, "left"))

    def window(self, s: float, t: float) -> np.ndarray:
        """Ordered product over in-period impulses with ``s < tau_k < t`` (``0 <= s <= t <= omega``)."""
        i0, i1 = self.window_indices(s, t)
        key = (i0, max(i0, i1))
        hit = self._window_cache.get(key)
        if hit is None:
            hit = np.eye(self.n)
            for k in range(key[0], key[1]):
                hit = self.impulse_factors[k] @ hit
            self._window_cache[key] = hit
        return hit

    def windows_to(self, taus, t: float) -> np.ndarray:
        """Stack of ``window(tau, t)`` for an array of ``tau <= t``, shape (N, n, n)."""
        taus = np.asarray(taus, dtype=float).reshape(-1)
        i1 = int(np.searchsorted(self.schedule.taus, t, "left"))
        table = np.empty((self.m + 1, self.n, self.n))
        for j in range(self.m + 1):
            key = (j, max(j, i1))
            hit = self._window_cache.get(key)
            if hit is None:
                hit = np.eye(self.n)
                for k in range(key[0], key[1]):
                    hit = self.impulse_factors[k] @ hit
                self._window_cache[key] = hit
            table[j] = hit
        return table[np.searchsorted(self.schedule.taus, taus, "right")]

    def forcing_value(self, t: float) -> np.ndarray:
        if self.forcing is None:
            return np.zeros(self.n)
        return np.asarray(self.forcing(t), dtype=float).reshape(self.n)

    def forcing_extended(self, t: float) -> np.ndarray:
        """Forcing continued beyond ``[0, omega]`` by ``F(t + omega) = rho F(t)``.

        Only the restriction of ``forcing`` to ``[0, omega]`` is ever used.
        """
        j = max(0, int(np.ceil(t / self.omega)) - 1)
        v = self.forcing_value(t - j * self.omega)
        for _ in range(j):
            v = self.rho @ v
        return v

    def describe(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "m": self.m,
            "omega": self.omega,
            "norm_rho": opnorm(self.rho),
        }
