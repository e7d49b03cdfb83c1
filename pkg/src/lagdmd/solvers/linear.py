"""Nonautonomous linear system ``x' = C(t) x + f(t)`` integrated with classical RK4."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..snapshots import SnapshotSet, TimeGrid


def rotation_matrix(eps: float = 0.1) -> Callable:
    """The 2x2 antisymmetric ``C(t) = [[0, 1 + eps t], [-1 - eps t, 0]]``."""
    def C(t):
        a = 1.0 + eps * t
        return np.array([[0.0, a], [-a, 0.0]])
    C.__name__ = f"rotation(eps={eps})"
    return C


def zero_forcing(n: int) -> Callable:
    def f(t):
        return np.zeros(n)
    f.__name__ = "zero"
    return f


@dataclass(frozen=True)
class LinearSystemConfig:
    C: Callable = field(default_factory=rotation_matrix)
    f: Callable = field(default_factory=lambda: zero_forcing(2))
    x0: tuple[float, ...] = (1.0, 0.0)
    dt: float = 1e-3
    t_final: float = 1.0
    substeps: int = 1

    @property
    def steps(self) -> int:
        return int(round(self.t_final / self.dt))


def solve_linear_system(cfg: LinearSystemConfig) -> SnapshotSet:
    x = np.asarray(cfg.x0, dtype=float)
    h = cfg.dt / cfg.substeps
    out = np.empty((x.size, cfg.steps + 1))
    out[:, 0] = x

    def rhs(t, y):
        return cfg.C(t) @ y + cfg.f(t)

    for k in range(cfg.steps):
        for j in range(cfg.substeps):
            t = k * cfg.dt + j * h
            k1 = rhs(t, x)
            k2 = rhs(t + h / 2, x + h / 2 * k1)
            k3 = rhs(t + h / 2, x + h / 2 * k2)
            k4 = rhs(t + h, x + h * k3)
            x = x + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        out[:, k + 1] = x
    return SnapshotSet(TimeGrid(0.0, cfg.dt, cfg.steps + 1), out)
