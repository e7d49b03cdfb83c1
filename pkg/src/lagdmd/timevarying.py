"""Piecewise-constant-in-time DMD.

The trajectory's ``m`` snapshot pairs are split into consecutive windows of
``window`` pairs (the last window may be shorter). Window ``i`` is fit with
standard DMD on ``X_i = [g_{ir+1} .. g_{(i+1)r}]`` and
``Y_i = [g_{ir+2} .. g_{(i+1)r+1}]``, so neighbouring windows share the seam
snapshot. Predictions chain the window propagators in time order.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dmd import DmdModel, fit_standard, mse_loss
from .errors import InvalidWindow, LagDmdError, WindowFitError
from .snapshots import DataPair, SnapshotSet, build_data_pair


@dataclass(frozen=True)
class PiecewiseDmdModel:
    t0: float
    dt: float
    starts: np.ndarray          # first pair index of each window
    lengths: np.ndarray         # number of pairs per window
    models: tuple[DmdModel, ...]
    window: int
    amplitudes: tuple[np.ndarray, ...] = field(default=(), repr=False)

    def __post_init__(self):
        if len(self.models) < 1:
            raise ValueError("need at least one window model")
        if not np.all(np.diff(self.boundaries) > 0):
            raise ValueError("window boundaries must increase strictly")

    @property
    def p(self) -> int:
        return len(self.models)

    @property
    def boundaries(self) -> np.ndarray:
        """End time of every window."""
        return self.t0 + self.dt * (self.starts + self.lengths)

    @property
    def start_times(self) -> np.ndarray:
        return self.t0 + self.dt * self.starts

    @property
    def t_final(self) -> float:
        return float(self.boundaries[-1])

    def active_window(self, t: float) -> int:
        """Index of the window evaluated at ``t``; window ``i`` owns ``(t_{i-1}, t_i]``."""
        if t < self.t0:
            raise IndexError(f"t={t} precedes training start {self.t0}")
        i = int(np.searchsorted(self.boundaries, t, side="left"))
        return min(i, self.p - 1)


def window_layout(m: int, window: int | Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Start index and pair count of each window covering ``m`` pairs."""
    if np.ndim(window) == 0:
        r = int(window)
        if r < 2:
            raise InvalidWindow(f"window must hold at least 2 pairs, got {r}")
        starts = np.arange(0, m, r)
        lengths = np.minimum(r, m - starts)
    else:
        lengths = np.asarray(window, dtype=int)
        if np.any(lengths < 1) or lengths.sum() != m:
            raise InvalidWindow(f"window sizes {list(lengths)} do not partition {m} pairs")
        starts = np.concatenate([[0], np.cumsum(lengths)[:-1]])
    return starts.astype(int), lengths.astype(int)


def window_pairs(s: SnapshotSet, start: int, length: int) -> DataPair:
    X = np.array(s.states[:, start:start + length])
    Y = np.array(s.states[:, start + 1:start + length + 1])
    return DataPair(X, Y)


def fit_piecewise(s: SnapshotSet, window: int | Sequence[int], eps: float | None,
                  rank: int | None = None) -> PiecewiseDmdModel:
    m = s.count - 1
    starts, lengths = window_layout(m, window)
    if np.ndim(window) == 0 and s.count < int(window) + 1:
        raise InvalidWindow(f"{s.count} snapshots cannot fill a window of {window} pairs")
    models, amps = [], []
    for i, (a, n) in enumerate(zip(starts, lengths)):
        d = window_pairs(s, a, n)
        try:
            model = fit_standard(d, eps, s.grid.dt, rank=rank)
        except LagDmdError as exc:
            raise WindowFitError(i, exc) from exc
        models.append(model)
        amps.append(model.amplitudes(d.X[:, 0]))
    nominal = int(window) if np.ndim(window) == 0 else int(max(lengths))
    return PiecewiseDmdModel(
        t0=s.grid.t0, dt=s.grid.dt, starts=starts, lengths=lengths,
        models=tuple(models), window=nominal, amplitudes=tuple(amps),
    )


def _advance(model: DmdModel, w: np.ndarray, elapsed: float) -> np.ndarray:
    b = model.amplitudes(w)
    return (model.modes @ (model.propagator(elapsed) * b)).real


def boundary_states(model: PiecewiseDmdModel, w0) -> list[np.ndarray]:
    """Chained state at each window start, ``out[i]`` for window ``i``."""
    w = np.asarray(w0, dtype=float)
    out = [w]
    for k in range(model.p - 1):
        w = _advance(model.models[k], w, model.dt * model.lengths[k])
        out.append(w)
    return out


def predict_chained(model: PiecewiseDmdModel, w0, t, _starts=None) -> np.ndarray:
    """Chained prediction at time(s) ``t`` from the state ``w0`` at ``t0``.

    Completed windows contribute their full-length propagators; the active
    window evolves for the remaining ``t - t_{i-1}``. Beyond the last boundary
    the last window extrapolates.
    """
    times = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(times < model.t0):
        raise IndexError(f"prediction time precedes training start {model.t0}")
    starts = _starts if _starts is not None else boundary_states(model, w0)
    t_start = model.start_times
    cols = []
    for tk in times:
        i = model.active_window(tk)
        cols.append(_advance(model.models[i], starts[i], tk - t_start[i]))
    out = np.stack(cols, axis=1)
    return out[:, 0] if np.ndim(t) == 0 else out


def piecewise_mse(model: PiecewiseDmdModel, s: SnapshotSet) -> float:
    """One-step training MSE of the piecewise operator over all ``m`` pairs."""
    total = 0.0
    for mdl, a, n in zip(model.models, model.starts, model.lengths):
        total += mse_loss(mdl, window_pairs(s, a, n)) * n
    return total / (s.count - 1)


def loss_dominance_report(s: SnapshotSet, window, eps: float | None,
                          rank: int | None = None) -> tuple[float, float]:
    """Training MSE of one global fit and of the piecewise fit.

    ``eps=None`` keeps every numerically nonzero singular value.
    """
    big = s.count if rank is None and eps is None else rank
    global_model = fit_standard(build_data_pair(s), eps, s.grid.dt, rank=big)
    loss_std = mse_loss(global_model, build_data_pair(s))
    pw = fit_piecewise(s, window, eps, rank=big)
    return loss_std, piecewise_mse(pw, s)


def dominant_frequencies(model: PiecewiseDmdModel, k: int = 3) -> np.ndarray:
    """``(p, k)`` complex frequencies per window, ordered by amplitude modulus."""
    out = np.full((model.p, k), np.nan + 1j * np.nan)
    for i, (mdl, amp) in enumerate(zip(model.models, model.amplitudes)):
        live = np.flatnonzero(~mdl.dead)
        order = live[np.argsort(-np.abs(amp[live]), kind="stable")][:k]
        out[i, :order.size] = mdl.omegas[order]
    return out


def write_spectrum_csv(model: PiecewiseDmdModel, path, k: int = 3) -> None:
    freqs = dominant_frequencies(model, k)
    t_mid = 0.5 * (model.start_times + model.boundaries)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_mid"] + [f"re_omega{j + 1}" for j in range(k)]
                   + [f"im_omega{j + 1}" for j in range(k)])
        for tm, row in zip(t_mid, freqs):
            w.writerow([repr(float(tm))] + [repr(float(v.real)) for v in row]
                       + [repr(float(v.imag)) for v in row])
