"""Conservative first-order upwind solver for ``u_t + (c sin(omega t) u)_x = 0``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..errors import StabilityError
from ..snapshots import SnapshotSet, TimeGrid
from .profiles import INITIAL_1D


@dataclass(frozen=True)
class Advection1dConfig:
    c: float = 2.0
    omega: float = np.pi / 2
    x_range: tuple[float, float] = (-10.0, 10.0)
    dx: float = 0.05
    dt: float = 0.01
    t_final: float = 8.0
    initial: str = "gaussian"

    @property
    def n(self) -> int:
        return int(round((self.x_range[1] - self.x_range[0]) / self.dx))

    @property
    def x(self) -> np.ndarray:
        """Cell centres."""
        return self.x_range[0] + self.dx * (np.arange(self.n) + 0.5)

    @property
    def steps(self) -> int:
        return int(round(self.t_final / self.dt))

    def velocity(self, t):
        return self.c * np.sin(self.omega * np.asarray(t, dtype=float))


def step_velocities(cfg: Advection1dConfig) -> np.ndarray:
    """Velocity used by each step, sampled at the step midpoint."""
    return cfg.velocity(cfg.dt * (np.arange(cfg.steps) + 0.5))


def solve_advection_1d(cfg: Advection1dConfig) -> SnapshotSet:
    v = step_velocities(cfg)
    courant = np.abs(v) * cfg.dt / cfg.dx
    bad = np.flatnonzero(courant > 1.0)
    if bad.size:
        k = int(bad[0])
        raise StabilityError(f"CFL number {courant[k]:.4f} > 1 at step {k}", step=k)

    u = INITIAL_1D[cfg.initial](cfg.x)
    out = np.empty((cfg.n, cfg.steps + 1))
    out[:, 0] = u
    flux = np.empty(cfg.n + 1)
    for k in range(cfg.steps):
        vk = v[k]
        # face fluxes; inflow boundary carries zero
        if vk >= 0:
            flux[0] = 0.0
            flux[1:] = vk * u
        else:
            flux[:-1] = vk * u
            flux[-1] = 0.0
        u = u - (cfg.dt / cfg.dx) * (flux[1:] - flux[:-1])
        out[:, k + 1] = u
    return SnapshotSet(TimeGrid(0.0, cfg.dt, cfg.steps + 1), out)


def semi_discrete_operator(cfg: Advection1dConfig, t: float) -> sp.csr_matrix:
    """``C(t)`` of the upwind semi-discretisation ``du/dt = C(t) u``."""
    vt = float(cfg.velocity(t))
    n = cfg.n
    a = abs(vt) / cfg.dx
    if vt >= 0:
        return sp.diags([-a * np.ones(n), a * np.ones(n - 1)], [0, -1], format="csr")
    return sp.diags([-a * np.ones(n), a * np.ones(n - 1)], [0, 1], format="csr")
