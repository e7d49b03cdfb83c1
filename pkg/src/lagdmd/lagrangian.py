"""Lagrangian observables ``w = [grid axes; values]`` for advection-dominated data.

The moving grid is a tensor product of one-dimensional axes that translate
rigidly with a time-dependent velocity, so a state of a ``d``-dimensional
problem with axis lengths ``n_k`` has ``sum(n_k) + prod(n_k)`` entries.
Fields on a tensor grid are stored with the last axis varying fastest,
i.e. a 2D field is ``u[iy, ix]`` flattened in C order.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import trapezoid

from .dmd import DmdModel, fit_standard
from .errors import DegenerateDensity, ExtrapolationWarning, MeshTangled
from .snapshots import SnapshotSet, build_data_pair
from .timevarying import PiecewiseDmdModel, fit_piecewise

MIN_MASS = 1e-12


@dataclass(frozen=True)
class MovingGrid:
    axes: tuple[np.ndarray, ...]
    time: float = 0.0

    def __post_init__(self):
        for a in self.axes:
            if np.ndim(a) != 1 or len(a) < 2:
                raise ValueError("each axis must be a vector of length >= 2")

    @property
    def d(self) -> int:
        return len(self.axes)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.axes)

    @property
    def field_shape(self) -> tuple[int, ...]:
        return self.sizes[::-1]

    @property
    def state_dim(self) -> int:
        return sum(self.sizes) + int(np.prod(self.sizes))

    def coordinates(self) -> np.ndarray:
        return np.concatenate(self.axes)


@dataclass(frozen=True)
class LagrangianState:
    grid: MovingGrid
    values: np.ndarray

    @property
    def N(self) -> int:
        return self.grid.state_dim

    def vector(self) -> np.ndarray:
        return np.concatenate([self.grid.coordinates(), np.ravel(self.values)])

    @classmethod
    def from_vector(cls, w, sizes: Sequence[int], time: float = 0.0) -> "LagrangianState":
        w = np.asarray(w, dtype=float)
        split = np.cumsum(sizes)
        expected = int(split[-1] + np.prod(sizes))
        if w.shape != (expected,):
            raise IndexError(f"state of length {w.size}, expected {expected}")
        parts = np.split(w[:split[-1]], split[:-1])
        grid = MovingGrid(tuple(parts), time)
        return cls(grid, w[split[-1]:].reshape(tuple(sizes)[::-1]))


@dataclass(frozen=True)
class VelocityEstimate:
    times: np.ndarray
    mean_path: np.ndarray     # (count, d)
    velocity: np.ndarray      # (count, d)

    def __call__(self, t) -> np.ndarray:
        """Piecewise-linear interpolant of the velocity samples (held constant outside)."""
        return np.array([np.interp(t, self.times, self.velocity[:, k])
                         for k in range(self.velocity.shape[1])])


def _trapezoid(f, axes):
    """Tensor trapezoid rule; ``f`` has shape ``(n_{d-1}, ..., n_0)``."""
    out = f
    for a in axes:
        out = trapezoid(out, a, axis=-1)
    return out


def mode_mean(u, axes: Sequence[np.ndarray]) -> np.ndarray:
    """Density-weighted mean position ``int x u / int u`` by trapezoid quadrature."""
    axes = [np.asarray(a, dtype=float) for a in axes]
    shape = tuple(len(a) for a in axes)[::-1]
    f = np.asarray(u, dtype=float).reshape(shape)
    mass = _trapezoid(f, axes)
    if not abs(mass) > MIN_MASS:
        raise DegenerateDensity(f"total mass {mass:.3e} too small to define a mean")
    mesh = np.meshgrid(*axes[::-1], indexing="ij")[::-1]
    return np.array([_trapezoid(f * X, axes) / mass for X in mesh])


def estimate_velocity(s: SnapshotSet, axes: Sequence[np.ndarray]) -> VelocityEstimate:
    """Track the mean of each snapshot and differentiate it in time
    (centred inside, first-order one-sided at the two ends)."""
    path = np.array([mode_mean(s.states[:, i], axes) for i in range(s.count)])
    vel = np.gradient(path, s.grid.dt, axis=0, edge_order=1)
    return VelocityEstimate(s.times, path, vel)


def write_velocity_csv(est: VelocityEstimate, path) -> None:
    names = ["v_x", "v_y", "v_z"][:est.velocity.shape[1]]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + names)
        for t, v in zip(est.times, est.velocity):
            w.writerow([repr(float(t))] + [repr(float(x)) for x in v])


def evolve_grid(g: MovingGrid, v: Callable, t_next: float, steps: int = 1) -> MovingGrid:
    """Advance each axis by RK4 integration of ``dX/dt = v(t)``."""
    if t_next < g.time:
        raise ValueError("cannot evolve the grid backwards")
    h = (t_next - g.time) / steps
    shift = np.zeros(g.d)
    t = g.time
    for _ in range(steps):
        k1 = np.asarray(v(t), dtype=float)
        k2 = np.asarray(v(t + h / 2), dtype=float)
        k4 = np.asarray(v(t + h), dtype=float)
        # k3 equals k2 because the right-hand side depends on t only
        shift += (h / 6) * (k1 + 4 * k2 + k4)
        t += h
    return MovingGrid(tuple(a + shift[k] for k, a in enumerate(g.axes)), t_next)


def _weights(src: np.ndarray, targets: np.ndarray):
    """Linear-interpolation indices/weights with clamping outside ``src``."""
    n = src.size
    idx = np.clip(np.searchsorted(src, targets, side="right") - 1, 0, n - 2)
    theta = (targets - src[idx]) / (src[idx + 1] - src[idx])
    outside = bool(np.any((theta < 0) | (theta > 1)))
    return idx, np.clip(theta, 0.0, 1.0), outside


def interpolate_tensor(f, src_axes, dst_axes):
    """Multilinear interpolation of ``f`` (shape ``(n_{d-1}, ..., n_0)``) from
    ``src_axes`` to ``dst_axes``. Returns the field and whether clamping occurred."""
    out = np.asarray(f, dtype=float)
    clamped = False
    d = len(src_axes)
    for k in range(d):
        idx, th, outside = _weights(src_axes[k], dst_axes[k])
        clamped |= outside
        ax = d - 1 - k
        lo = np.take(out, idx, axis=ax)
        hi = np.take(out, idx + 1, axis=ax)
        shape = [1] * out.ndim
        shape[ax] = th.size
        th = th.reshape(shape)
        out = lo * (1 - th) + hi * th
    return out, clamped


def to_lagrangian(s: SnapshotSet, axes: Sequence[np.ndarray], velocity: Callable,
                  substeps: int = 1) -> SnapshotSet:
    """Lagrangian states ``w(t_i)``: the grid is carried by ``velocity`` and the
    Eulerian snapshot is interpolated onto it."""
    axes = tuple(np.asarray(a, dtype=float) for a in axes)
    grid = MovingGrid(axes, s.grid.t0)
    shape = grid.field_shape
    states = np.empty((grid.state_dim, s.count))
    clamped = False
    for i in range(s.count):
        if i > 0:
            grid = evolve_grid(grid, velocity, s.grid.time(i), steps=substeps)
        vals, out = interpolate_tensor(s.states[:, i].reshape(shape), axes, grid.axes)
        clamped |= out
        states[:, i] = LagrangianState(grid, vals).vector()
    if clamped:
        warnings.warn("moving grid left the Eulerian domain; boundary values used",
                      ExtrapolationWarning, stacklevel=2)
    return SnapshotSet(s.grid, states)


def to_eulerian(w, sizes: Sequence[int], target_axes: Sequence[np.ndarray]) -> np.ndarray:
    """Interpolate a Lagrangian state back to a fixed grid (flattened field)."""
    state = LagrangianState.from_vector(w, sizes)
    for a in state.grid.axes:
        if not np.all(np.diff(a) > 0):
            raise MeshTangled("moving grid axis is not strictly increasing")
    target_axes = tuple(np.asarray(a, dtype=float) for a in target_axes)
    vals, _ = interpolate_tensor(state.values, state.grid.axes, target_axes)
    return vals.ravel()


def fit_lagrangian(s: SnapshotSet, eps: float | None, rank: int | None = None) -> DmdModel:
    return fit_standard(build_data_pair(s), eps, s.grid.dt, rank=rank)


def fit_lagrangian_tv(s: SnapshotSet, window, eps: float | None,
                      rank: int | None = None) -> PiecewiseDmdModel:
    return fit_piecewise(s, window, eps, rank=rank)
