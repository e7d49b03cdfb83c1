"""Snapshot trajectories, DMD data matrices and the binary snapshot file format.

A trajectory is stored column-major: ``states[:, i]`` is the state at
``t0 + i * dt``.

File layout (little-endian)::

    b"DMDS"  u32 version=1  u64 dim  u64 count  f64 t0  f64 dt
    count * dim binary64 values, one snapshot after another
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, InsufficientData

MAGIC = b"DMDS"
VERSION = 1
_HEADER = struct.Struct("<4sIQQdd")


@dataclass(frozen=True)
class TimeGrid:
    t0: float
    dt: float
    count: int

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.count < 1:
            raise ValueError(f"count must be >= 1, got {self.count}")

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.count)

    def time(self, i: int) -> float:
        return self.t0 + i * self.dt

    @property
    def t_final(self) -> float:
        return self.time(self.count - 1)


class SnapshotSet:
    """Immutable, uniformly sampled trajectory of real state vectors."""

    def __init__(self, grid: TimeGrid, states):
        states = np.array(states, dtype=np.float64, order="F", copy=True)
        if states.ndim == 1:
            states = states[np.newaxis, :]
        if states.ndim != 2:
            raise ValueError("states must be a dim x count matrix")
        if states.shape[1] != grid.count:
            raise ValueError(
                f"{states.shape[1]} states for a grid of {grid.count} points")
        if not np.all(np.isfinite(states)):
            raise ValueError("states contain non-finite values")
        states.setflags(write=False)
        self.grid = grid
        self.states = states

    @classmethod
    def from_states(cls, states, dt: float, t0: float = 0.0) -> "SnapshotSet":
        states = np.asarray(states, dtype=np.float64)
        if states.ndim == 1:
            states = states[np.newaxis, :]
        return cls(TimeGrid(t0, dt, states.shape[1]), states)

    @property
    def dim(self) -> int:
        return self.states.shape[0]

    @property
    def count(self) -> int:
        return self.grid.count

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def __len__(self):
        return self.count

    def __eq__(self, other):
        if not isinstance(other, SnapshotSet):
            return NotImplemented
        return (self.grid == other.grid
                and self.states.shape == other.states.shape
                and self.states.tobytes() == other.states.tobytes())

    def __repr__(self):
        g = self.grid
        return f"SnapshotSet(dim={self.dim}, count={g.count}, t0={g.t0}, dt={g.dt})"


@dataclass(frozen=True)
class DataPair:
    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        if self.X.shape != self.Y.shape:
            raise ValueError(f"X {self.X.shape} and Y {self.Y.shape} differ in shape")

    @property
    def m(self) -> int:
        return self.X.shape[1]


def build_data_pair(s: SnapshotSet) -> DataPair:
    """Time-shifted data matrices ``X = [u_1..u_m]``, ``Y = [u_2..u_{m+1}]``."""
    if s.count < 2:
        raise InsufficientData(f"need at least 2 snapshots, got {s.count}")
    X = np.array(s.states[:, :-1], order="F")
    Y = np.array(s.states[:, 1:], order="F")
    return DataPair(X, Y)


def slice_window(s: SnapshotSet, i0: int, length: int) -> SnapshotSet:
    if i0 < 0 or length < 1 or i0 + length > s.count:
        raise IndexError(
            f"window [{i0}, {i0 + length}) outside trajectory of {s.count} states")
    grid = TimeGrid(s.grid.time(i0), s.grid.dt, length)
    return SnapshotSet(grid, s.states[:, i0:i0 + length])


def save(s: SnapshotSet, path) -> None:
    header = _HEADER.pack(MAGIC, VERSION, s.dim, s.count, s.grid.t0, s.grid.dt)
    body = np.asarray(s.states.T, dtype="<f8").tobytes(order="C")
    Path(path).write_bytes(header + body)


def load(path) -> SnapshotSet:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, dim, count, t0, dt = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    expected = _HEADER.size + 8 * dim * count
    if len(raw) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(raw)}")
    values = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    states = values.reshape(count, dim).T.astype(np.float64)
    try:
        return SnapshotSet(TimeGrid(t0, dt, count), states)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def to_csv(s: SnapshotSet, path) -> None:
    """One row per snapshot: ``t,c0,c1,...`` with round-trip float formatting."""
    header = "t," + ",".join(f"c{k}" for k in range(s.dim))
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for t, col in zip(s.times, s.states.T):
            fh.write(repr(float(t)) + "," + ",".join(repr(float(v)) for v in col) + "\n")
