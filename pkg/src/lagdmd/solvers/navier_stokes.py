"""Incompressible 2D Navier-Stokes past a masked cylinder on a staggered grid.

Velocities live on cell faces (``u[i, j]`` at ``x = i h``, ``v[i, j]`` at
``y = j h``), pressure at cell centres. Each step advances momentum with
donor-cell fluxes and explicit diffusion, then projects onto discretely
divergence-free fields with a sparse direct Poisson solve. Cells whose centre
lies inside the cylinder are solid; every face touching a solid cell is held
at zero velocity.

Boundaries: uniform inflow ``u = 1, v = 0`` on the left; ``p = 0`` and
zero-gradient velocity on the right; no-slip (or free-slip) top and bottom.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..errors import SolverError, StabilityError
from ..snapshots import SnapshotSet, TimeGrid

POISSON_TOL = 1e-8


@dataclass(frozen=True)
class NavierStokesConfig:
    rho: float = 1.0
    nu: float = 1.0 / 600.0
    Lx: float = 2.0
    Ly: float = 1.0
    cylinder_center: tuple[float, float] | None = (0.3, 0.5)
    cylinder_radius: float = 0.1
    dx: float = 0.02
    dt: float = 0.001
    t_final: float = 3.0
    inflow: float = 1.0
    walls: str = "no_slip"
    save_every: int = 1

    @property
    def nx(self) -> int:
        return int(round(self.Lx / self.dx))

    @property
    def ny(self) -> int:
        return int(round(self.Ly / self.dx))

    @property
    def steps(self) -> int:
        return int(round(self.t_final / self.dt))

    def solid_mask(self) -> np.ndarray:
        xc = (np.arange(self.nx) + 0.5) * self.dx
        yc = (np.arange(self.ny) + 0.5) * self.dx
        X, Y = np.meshgrid(xc, yc, indexing="ij")
        if self.cylinder_center is None:
            return np.zeros((self.nx, self.ny), dtype=bool)
        cx, cy = self.cylinder_center
        return (X - cx) ** 2 + (Y - cy) ** 2 <= self.cylinder_radius**2


@dataclass
class NavierStokesResult:
    snapshots: SnapshotSet
    max_divergence: np.ndarray      # per step, over fluid cells, after projection
    u: np.ndarray
    v: np.ndarray


class _Projection:
    """Discrete divergence/gradient pair restricted to the free faces."""

    def __init__(self, cfg: NavierStokesConfig, solid: np.ndarray):
        nx, ny, h = cfg.nx, cfg.ny, cfg.dx
        self.shape_u, self.shape_v = (nx + 1, ny), (nx, ny + 1)
        fluid = ~solid

        free_u = np.zeros(self.shape_u, dtype=bool)
        free_u[1:nx] = fluid[:-1] & fluid[1:]
        free_u[nx] = fluid[-1]                      # outflow faces
        free_v = np.zeros(self.shape_v, dtype=bool)
        free_v[:, 1:ny] = fluid[:, :-1] & fluid[:, 1:]
        self.free_u, self.free_v = free_u, free_v

        cell_id = -np.ones((nx, ny), dtype=int)
        cell_id[fluid] = np.arange(np.count_nonzero(fluid))
        self.cell_id, self.fluid = cell_id, fluid
        ncell = int(fluid.sum())

        # divergence over all faces (fluid rows only)
        def div_block(shape, axis):
            rows, cols, vals = [], [], []
            face_id = np.arange(np.prod(shape)).reshape(shape)
            I, J = np.nonzero(fluid)
            lo = face_id[I, J]
            hi = face_id[I + 1, J] if axis == 0 else face_id[I, J + 1]
            cid = cell_id[I, J]
            rows += [cid, cid]
            cols += [hi, lo]
            vals += [np.full(cid.size, 1.0 / h), np.full(cid.size, -1.0 / h)]
            return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                                 shape=(ncell, int(np.prod(shape))))

        self.Du = div_block(self.shape_u, 0)
        self.Dv = div_block(self.shape_v, 1)

        # gradient onto free faces
        def grad_block(free, axis):
            F = np.argwhere(free)
            rows, cols, vals = [], [], []
            for k, (i, j) in enumerate(F):
                if axis == 0:
                    right = cell_id[i, j] if i < nx else -1
                    left = cell_id[i - 1, j]
                    if right >= 0:
                        rows += [k, k]; cols += [right, left]; vals += [1 / h, -1 / h]
                    else:                          # Dirichlet p = 0 at x = Lx
                        rows += [k]; cols += [left]; vals += [-2 / h]
                else:
                    rows += [k, k]; cols += [cell_id[i, j], cell_id[i, j - 1]]
                    vals += [1 / h, -1 / h]
            return sp.csr_matrix((vals, (rows, cols)), shape=(len(F), ncell))

        self.Gu = grad_block(free_u, 0)
        self.Gv = grad_block(free_v, 1)
        A = (self.Du[:, free_u.ravel()] @ self.Gu + self.Dv[:, free_v.ravel()] @ self.Gv).tocsc()
        self.A = A
        self.lu = spla.splu(A)

    def divergence(self, u, v) -> np.ndarray:
        return self.Du @ u.ravel() + self.Dv @ v.ravel()

    def project(self, u, v, dt, rho):
        rhs = self.divergence(u, v) * (rho / dt)
        p = self.lu.solve(rhs)
        residual = np.max(np.abs(self.A @ p - rhs)) / max(1.0, np.max(np.abs(rhs)))
        if not np.isfinite(residual) or residual > POISSON_TOL:
            raise SolverError(f"pressure solve residual {residual:.3e}", residual=residual)
        u = u.copy(); v = v.copy()
        u[self.free_u] -= (dt / rho) * (self.Gu @ p)
        v[self.free_v] -= (dt / rho) * (self.Gv @ p)
        return u, v, p


def _upwind(vel, lo, hi):
    return np.where(vel > 0, lo, hi)


def _momentum(u, v, cfg: NavierStokesConfig):
    """Explicit advection-diffusion tendency for both face velocity arrays."""
    h, nu = cfg.dx, cfg.nu
    wall = -1.0 if cfg.walls == "no_slip" else 1.0

    # u padded with wall ghosts in y: shape (nx+1, ny+2)
    U = np.concatenate([wall * u[:, :1], u, wall * u[:, -1:]], axis=1)
    # v padded with ghosts in x: inflow v = 0, outflow zero gradient
    V = np.concatenate([-v[:1], v, v[-1:]], axis=0)

    # --- u tendency on faces i = 1..nx-1
    uc = 0.5 * (u[:-1] + u[1:])                                  # cell centres
    Fc = uc * _upwind(uc, u[:-1], u[1:])
    duu = (Fc[1:] - Fc[:-1]) / h                                 # (nx-1, ny)
    vcorner = 0.5 * (V[1:-2] + V[2:-1])                          # x = i h, i = 1..nx-1; (nx-1, ny+1)
    Gc = vcorner * _upwind(vcorner, U[1:-1, :-1], U[1:-1, 1:])
    duv = (Gc[:, 1:] - Gc[:, :-1]) / h
    lap_u = (u[2:] - 2 * u[1:-1] + u[:-2]) / h**2 + (U[1:-1, 2:] - 2 * u[1:-1] + U[1:-1, :-2]) / h**2
    du = np.zeros_like(u)
    du[1:-1] = -duu - duv + nu * lap_u

    # --- v tendency on faces j = 1..ny-1
    vc = 0.5 * (v[:, :-1] + v[:, 1:])
    Hc = vc * _upwind(vc, v[:, :-1], v[:, 1:])
    dvv = (Hc[:, 1:] - Hc[:, :-1]) / h                           # (nx, ny-1)
    ucorner = 0.5 * (u[:, :-1] + u[:, 1:])                       # y = j h, j = 1..ny-1; (nx+1, ny-1)
    Kc = ucorner * _upwind(ucorner, V[:-1, 1:-1], V[1:, 1:-1])
    duv_x = (Kc[1:] - Kc[:-1]) / h
    lap_v = (V[2:, 1:-1] - 2 * v[:, 1:-1] + V[:-2, 1:-1]) / h**2 + (v[:, 2:] - 2 * v[:, 1:-1] + v[:, :-2]) / h**2
    dv = np.zeros_like(v)
    dv[:, 1:-1] = -dvv - duv_x + nu * lap_v
    return du, dv


def simulate_navier_stokes(cfg: NavierStokesConfig) -> NavierStokesResult:
    nx, ny, dt = cfg.nx, cfg.ny, cfg.dt
    solid = cfg.solid_mask()
    proj = _Projection(cfg, solid)

    fixed_u = np.zeros((nx + 1, ny))
    fixed_u[0] = cfg.inflow

    def enforce(u, v):
        u[~proj.free_u] = fixed_u[~proj.free_u]
        v[~proj.free_v] = 0.0
        return u, v

    u = np.zeros((nx + 1, ny))
    v = np.zeros((nx, ny + 1))
    u[nx] = u[nx - 1]
    u, v = enforce(u, v)
    u, v, _ = proj.project(u, v, dt, cfg.rho)

    n_saved = cfg.steps // cfg.save_every + 1
    frames = np.empty((nx * ny, n_saved))
    max_div = np.empty(cfg.steps)

    def magnitude(u, v):
        uc = 0.5 * (u[:-1] + u[1:])
        vc = 0.5 * (v[:, :-1] + v[:, 1:])
        w = np.sqrt(uc**2 + vc**2)
        w[solid] = 0.0
        return w.T.ravel()

    frames[:, 0] = magnitude(u, v)
    for k in range(cfg.steps):
        umax = max(np.max(np.abs(u)), np.max(np.abs(v)))
        if not np.isfinite(umax) or umax * dt / cfg.dx > 1.0:
            raise StabilityError(f"CFL number {umax * dt / cfg.dx:.3f} > 1 at step {k}", step=k)
        du, dv = _momentum(u, v, cfg)
        us, vs = u + dt * du, v + dt * dv
        us[nx] = us[nx - 1]                      # zero-gradient outflow predictor
        us, vs = enforce(us, vs)
        u, v, _ = proj.project(us, vs, dt, cfg.rho)
        max_div[k] = np.max(np.abs(proj.divergence(u, v)))
        if (k + 1) % cfg.save_every == 0:
            frames[:, (k + 1) // cfg.save_every] = magnitude(u, v)

    grid = TimeGrid(0.0, dt * cfg.save_every, n_saved)
    return NavierStokesResult(SnapshotSet(grid, frames), max_div, u, v)


def solve_navier_stokes(cfg: NavierStokesConfig) -> SnapshotSet:
    """Velocity-magnitude snapshots at cell centres (row-major in ``(y, x)``)."""
    return simulate_navier_stokes(cfg).snapshots
