"""Du-Fort-Frankel solver for ``u_t + vx(t) u_x + vy(t) u_y = D lap(u)`` on a
rectangle with zero Dirichlet boundaries.

Snapshots are the node values ``u[iy, ix]`` flattened in C order.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp

from ..errors import StabilityError
from ..snapshots import SnapshotSet, TimeGrid
from .profiles import INITIAL_2D, orbit_vx, orbit_vy

BLOWUP_FACTOR = 10.0


@dataclass(frozen=True)
class AdvDiff2dConfig:
    vx: Callable = orbit_vx
    vy: Callable = orbit_vy
    D: float = 0.001
    nx: int = 50
    ny: int = 50
    x_range: tuple[float, float] = (-10.0, 10.0)
    y_range: tuple[float, float] = (-10.0, 10.0)
    dt: float = 0.01
    t_final: float = 10.0
    initial: str = "gaussian"

    def __post_init__(self):
        if self.nx < 3 or self.ny < 3:
            raise ValueError("need at least 3 nodes per direction")
        if not all(np.isfinite([self.D, self.dt, self.t_final])) or self.dt <= 0:
            raise ValueError("D, dt, t_final must be finite with dt > 0")

    @property
    def x(self) -> np.ndarray:
        return np.linspace(*self.x_range, self.nx)

    @property
    def y(self) -> np.ndarray:
        return np.linspace(*self.y_range, self.ny)

    @property
    def dx(self) -> float:
        return (self.x_range[1] - self.x_range[0]) / (self.nx - 1)

    @property
    def dy(self) -> float:
        return (self.y_range[1] - self.y_range[0]) / (self.ny - 1)

    @property
    def steps(self) -> int:
        return int(round(self.t_final / self.dt))

    def initial_field(self) -> np.ndarray:
        X, Y = np.meshgrid(self.x, self.y)
        u0 = INITIAL_2D[self.initial](X, Y)
        _zero_boundary(u0)
        return u0


def _zero_boundary(u):
    u[0, :] = u[-1, :] = 0.0
    u[:, 0] = u[:, -1] = 0.0


def solve_advdiff_2d(cfg: AdvDiff2dConfig) -> SnapshotSet:
    dt, dx, dy, D = cfg.dt, cfg.dx, cfg.dy, cfg.D
    ax, ay = D * dt / dx**2, D * dt / dy**2
    u_prev = cfg.initial_field()
    limit = BLOWUP_FACTOR * np.max(np.abs(u_prev))
    out = np.empty((cfg.nx * cfg.ny, cfg.steps + 1))
    out[:, 0] = u_prev.ravel()

    def advection_terms(u, t):
        cx, cy = float(cfg.vx(t)) * dt / dx, float(cfg.vy(t)) * dt / dy
        E, W = u[1:-1, 2:], u[1:-1, :-2]
        N, S = u[2:, 1:-1], u[:-2, 1:-1]
        return E, W, N, S, cx, cy

    # forward-Euler start supplies the second time level
    E, W, N, S, cx, cy = advection_terms(u_prev, 0.0)
    c = u_prev[1:-1, 1:-1]
    u = np.zeros_like(u_prev)
    u[1:-1, 1:-1] = (c - 0.5 * cx * (E - W) - 0.5 * cy * (N - S)
                     + ax * (E - 2 * c + W) + ay * (N - 2 * c + S))
    out[:, 1] = u.ravel()

    denom = 1.0 + 2 * ax + 2 * ay
    for k in range(1, cfg.steps):
        E, W, N, S, cx, cy = advection_terms(u, k * dt)
        u_next = np.zeros_like(u)
        u_next[1:-1, 1:-1] = (
            (1.0 - 2 * ax - 2 * ay) * u_prev[1:-1, 1:-1]
            + 2 * ax * (E + W) + 2 * ay * (N + S)
            - cx * (E - W) - cy * (N - S)
        ) / denom
        if not np.all(np.isfinite(u_next)) or np.max(np.abs(u_next)) > limit:
            raise StabilityError(f"solution exceeded {limit:.3g} at step {k + 1}", step=k + 1)
        u_prev, u = u, u_next
        out[:, k + 1] = u.ravel()
    return SnapshotSet(TimeGrid(0.0, dt, cfg.steps + 1), out)


def semi_discrete_operator(cfg: AdvDiff2dConfig, t: float) -> sp.csr_matrix:
    """Centred-difference ``C(t)`` acting on the interior unknowns (boundary rows zero)."""
    nx, ny = cfg.nx, cfg.ny

    def axis(n, h, v):
        interior = np.ones(n)
        interior[[0, -1]] = 0.0
        first = sp.diags([interior[:-1] * -v / (2 * h), interior[1:] * v / (2 * h)], [1, -1])
        second = sp.diags([interior * -2 / h**2, interior[:-1] / h**2, interior[1:] / h**2],
                          [0, 1, -1])
        return first, second, sp.diags(interior)

    Fx, Lx, Ix = axis(nx, cfg.dx, float(cfg.vx(t)))
    Fy, Ly, Iy = axis(ny, cfg.dy, float(cfg.vy(t)))
    # row index = iy * nx + ix
    C = sp.kron(Iy, Fx + cfg.D * Lx) + sp.kron(Fy + cfg.D * Ly, Ix)
    return C.tocsr()
