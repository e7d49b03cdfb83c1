"""A-priori error and perturbation estimates for DMD operators, each paired
with the directly measured quantity it bounds.

Every estimator returns a :class:`BoundReport`; ``satisfied`` is the
verdict of ``measured <= bound`` with a small absolute/relative slack for
rounding.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InvalidCoefficient, RankCollapse
from .snapshots import DataPair, SnapshotSet
from .timevarying import PiecewiseDmdModel, predict_chained, window_pairs

BOUND_RTOL = 1e-9
ORTHOGONAL_RTOL = 1e-12
COLLAPSE_RTOL = 1e-12
GAMMA_INFLATION = 1.01
GAMMA_POINTS = 100
_GAMMA_FLOOR = 1e-12


@dataclass(frozen=True)
class BoundReport:
    name: str
    computed_bound: float | np.ndarray
    measured: float | np.ndarray
    satisfied: bool
    slack: float | np.ndarray
    instance: str = ""
    m: int | np.ndarray | None = None
    notes: str = ""


def make_report(name: str, bound, measured, instance: str = "", m=None, notes: str = "") -> BoundReport:
    b = np.asarray(bound, dtype=float)
    e = np.asarray(measured, dtype=float)
    with np.errstate(invalid="ignore"):
        tol = BOUND_RTOL * np.maximum(1.0, np.where(np.isfinite(b), b, 0.0))
        ok = bool(np.all(e <= b + tol))
    scalar = b.ndim == 0
    return BoundReport(
        name=name,
        computed_bound=float(b) if scalar else b,
        measured=float(e) if scalar else e,
        satisfied=ok,
        slack=float(b - e) if scalar else b - e,
        instance=instance,
        m=m,
        notes=notes,
    )


@dataclass(frozen=True)
class LipschitzData:
    L: float
    source: str = "user-supplied"   # or "estimated"

    def __post_init__(self):
        if not self.L >= 0:
            raise ValueError(f"Lipschitz constant must be non-negative, got {self.L}")


@dataclass(frozen=True)
class GammaF:
    gamma_i: np.ndarray
    f_i: np.ndarray
    gamma: float
    f: float

    @classmethod
    def from_intervals(cls, gamma_i, f_i) -> "GammaF":
        g = np.asarray(gamma_i, dtype=float)
        f = np.asarray(f_i, dtype=float)
        if np.any(g < 0) or np.any(f < 0):
            raise ValueError("interval maxima must be non-negative")
        return cls(gamma_i=g, f_i=f, gamma=float(g.max()), f=float(f.max()))


def spectral_norm(A) -> float:
    """Largest singular value of a dense or sparse matrix."""
    if sp.issparse(A):
        if min(A.shape) <= 2:
            return float(np.linalg.norm(A.toarray(), 2))
        if A.nnz == 0:
            return 0.0
        return float(spla.svds(A.astype(float), k=1, return_singular_vectors=False,
                               random_state=0)[0])
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def _svd(X):
    U, s, Vh = np.linalg.svd(np.asarray(X, dtype=float), full_matrices=False)
    floor = (s[0] if s.size else 0.0) * max(np.shape(X)) * np.finfo(float).eps
    rank = int(np.count_nonzero(s > floor))
    return U, s, Vh, rank


def _truncated_pinv(U, s, Vh, r):
    return (Vh[:r].T / s[:r]) @ U[:, :r].T


# --- prediction error of the piecewise model --------------------------------

def window_residuals(model: PiecewiseDmdModel, s: SnapshotSet) -> np.ndarray:
    """Per window, ``max_i ||x_{i+1} - K x_i||`` over the window's pairs."""
    _check_model(model, s)
    out = np.empty(model.p)
    for k, (mdl, a, n) in enumerate(zip(model.models, model.starts, model.lengths)):
        d = window_pairs(s, a, n)
        out[k] = np.max(np.linalg.norm(d.Y - mdl.apply(d.X), axis=0))
    return out


def _check_model(model: PiecewiseDmdModel, s: SnapshotSet) -> None:
    m = int(model.starts[-1] + model.lengths[-1])
    if m != s.count - 1:
        raise IndexError(f"model covers {m} pairs, trajectory has {s.count - 1}")
    if model.models[0].dim != s.dim:
        raise IndexError(f"model dim {model.models[0].dim}, trajectory dim {s.dim}")


def pointwise_error_bound(model: PiecewiseDmdModel, s: SnapshotSet, L: LipschitzData,
                          E0: float | None = None) -> BoundReport:
    """Recursive bound ``B_n = (1 + e^{L dt}) B_{n-1} + rho(t_n)^2`` on the
    squared chained prediction error along the training trajectory.

    ``rho(t_n)`` is the largest one-step residual of the window active at
    ``t_n``. ``E0`` defaults to the measured squared error at ``t_0``.
    """
    _check_model(model, s)
    rho = window_residuals(model, s)
    x0 = s.states[:, 0]
    pred = predict_chained(model, x0, s.times)
    measured = np.sum((s.states - pred) ** 2, axis=0)
    if E0 is None:
        E0 = float(measured[0])
    if E0 < 0:
        raise ValueError("initial error must be non-negative")

    growth = 1.0 + math.exp(L.L * s.grid.dt)
    bound = np.empty(s.count)
    bound[0] = E0
    with np.errstate(over="ignore"):
        for n in range(1, s.count):
            w = model.active_window(s.times[n])
            bound[n] = growth * bound[n - 1] + rho[w] ** 2
    overflow = int(np.argmax(np.isinf(bound))) if np.isinf(bound).any() else -1
    notes = f"L={L.L:.6g} ({L.source}); E0={E0:.6g}"
    if overflow >= 0:
        notes += f"; bound exceeds float range from step {overflow}"
    return make_report("pointwise_error", bound, measured, m=np.arange(s.count), notes=notes)


def estimate_lipschitz(C: Callable, t0: float, t1: float, points: int = 1000,
                       norm: Callable = spectral_norm) -> LipschitzData:
    """``max_t ||C(t)||_2`` on a dense uniform sample of ``[t0, t1]``."""
    ts = np.linspace(t0, t1, points)
    return LipschitzData(L=max(norm(C(t)) for t in ts), source="estimated")


# --- operator perturbation --------------------------------------------------

def rank_truncation_bound(d: DataPair, r: int, instance: str = "") -> BoundReport:
    """``||Y X^+ - Y X_r^+||_2 <= sigma_max(Y) / sigma_min(X)``."""
    U, s, Vh, rank = _svd(d.X)
    if not 1 <= r <= rank:
        raise ValueError(f"r={r} outside [1, rank(X)={rank}]")
    notes = ""
    if rank < min(d.X.shape):
        notes = f"X rank-deficient (rank {rank}); using smallest nonzero singular value"
    full = _truncated_pinv(U, s, Vh, rank)
    trunc = _truncated_pinv(U, s, Vh, r)
    measured = spectral_norm(d.Y @ (full - trunc))
    bound = spectral_norm(d.Y) / s[rank - 1]
    return make_report("rank_truncation", bound, measured, instance=instance, m=d.m, notes=notes)


def pointwise_rank_bound(d: DataPair, r: int, x, instance: str = "") -> BoundReport:
    """``||K x - K_r x||^2 <= sum_{k>r} sigma_max(Y)^2 (u_k^T x)^2 / sigma_k(X)^2``."""
    x = np.asarray(x, dtype=float)
    U, s, Vh, rank = _svd(d.X)
    if not 1 <= r <= rank:
        raise ValueError(f"r={r} outside [1, rank(X)={rank}]")
    coeff = U[:, r:rank].T @ x / s[r:rank]
    bound = spectral_norm(d.Y) * math.sqrt(float(coeff @ coeff))
    measured = float(np.linalg.norm(d.Y @ (Vh[r:rank].T @ coeff)))
    return make_report("pointwise_rank", bound, measured, instance=instance, m=d.m)


@dataclass(frozen=True)
class PinvUpdate:
    pinv: np.ndarray
    c: float


def pinv_append(Xm_pinv, Xm, u) -> PinvUpdate:
    """Pseudoinverse of ``[Xm, u]`` from that of ``Xm`` by the rank-one block formula."""
    Xm = np.asarray(Xm, dtype=float)
    Xm_pinv = np.asarray(Xm_pinv, dtype=float)
    u = np.asarray(u, dtype=float)
    a = Xm_pinv @ u
    # (I - Xm Xm^+) u; its squared norm is ||u||^2 - u^T Xm (Xm^T Xm)^{-1} Xm^T u
    resid = u - Xm @ a
    denom = float(resid @ resid)
    uu = float(u @ u)
    if denom <= COLLAPSE_RTOL * uu:
        raise RankCollapse(f"appended column lies in range(Xm): residual {denom:.3e}, ||u||^2 {uu:.3e}")
    c = 1.0 / denom
    top = Xm_pinv - c * np.outer(a, resid)
    return PinvUpdate(pinv=np.vstack([top, c * resid[None, :]]), c=c)


def column_deletion_bound(Xm, Ym, u, v, instance: str = "") -> BoundReport:
    """Change of ``Y X^+`` when the newest pair ``(u, v)`` is dropped."""
    Xm = np.asarray(Xm, dtype=float)
    Ym = np.asarray(Ym, dtype=float)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    Um, s, Vh, rank = _svd(Xm)
    if rank < Xm.shape[1]:
        raise RankCollapse(f"Xm has rank {rank} < {Xm.shape[1]} columns")
    Xm_pinv = _truncated_pinv(Um, s, Vh, rank)
    upd = pinv_append(Xm_pinv, Xm, u)

    K = np.column_stack([Ym, v]) @ upd.pinv
    Km = Ym @ Xm_pinv
    measured = spectral_norm(K - Km)

    uu = float(u @ u)
    vv = float(v @ v)
    smin2 = s[-1] ** 2
    ymax2 = spectral_norm(Ym) ** 2
    orthogonal = np.linalg.norm(Xm.T @ u) <= ORTHOGONAL_RTOL * math.sqrt(uu)
    if orthogonal:
        name = "column_deletion_orthogonal"
        bound = math.sqrt((ymax2 + vv) / uu + (ymax2 + 2 * vv) / smin2)
    else:
        name = "column_deletion"
        bound = math.sqrt(upd.c ** 2 * uu * (1 + uu / smin2) * (ymax2 + vv) + vv / smin2)
    return make_report(name, bound, measured, instance=instance, m=Xm.shape[1],
                       notes=f"c={upd.c:.6g}")


# --- time-shift norm for x' = C(t) x + f(t) -----------------------------------

def sample_gamma_f(C: Callable, f: Callable, t0: float, dt: float, m: int,
                   points: int = GAMMA_POINTS, norm: Callable = spectral_norm,
                   inflation: float = GAMMA_INFLATION) -> GammaF:
    """Per-step maxima of ``||C(s)||_2`` and ``||f(s)||_2`` by dense sampling,
    inflated by a fixed safety factor."""
    gamma_i = np.empty(m)
    f_i = np.empty(m)
    for i in range(m):
        ts = t0 + dt * (i + np.linspace(0.0, 1.0, points))
        Cs = [C(t) for t in ts]
        fs = [np.asarray(f(t), dtype=float) for t in ts]
        finite = all(np.all(np.isfinite(c.data if sp.issparse(c) else c)) for c in Cs)
        if not (finite and all(np.all(np.isfinite(x)) for x in fs)):
            raise InvalidCoefficient(f"non-finite coefficient sample on step {i}")
        g = [norm(c) for c in Cs]
        fv = [float(np.linalg.norm(x)) for x in fs]
        gamma_i[i] = inflation * max(g)
        f_i[i] = inflation * max(fv)
    return GammaF.from_intervals(gamma_i, f_i)


def time_shift_bound_value(gf: GammaF, dt: float, frob2: float, m: int) -> tuple[float, str]:
    """``exp(gamma^2 dt / 2) sqrt(m f^2 / gamma^2 + ||X||_F^2)``."""
    notes = ""
    if gf.gamma < _GAMMA_FLOOR:
        if gf.f == 0.0:
            forcing = 0.0
        else:
            return math.inf, "gamma vanishes with nonzero forcing; bound is infinite"
    else:
        forcing = m * gf.f ** 2 / gf.gamma ** 2
    return math.exp(0.5 * gf.gamma ** 2 * dt) * math.sqrt(forcing + frob2), notes


def time_shift_bound(cfg, d: DataPair, gamma_f: GammaF | None = None, t0: float = 0.0,
                     instance: str = "") -> BoundReport:
    """``||Y||_2`` against its bound in terms of ``X`` for ``x' = C(t) x + f(t)``.

    ``cfg`` supplies ``C``, ``f`` and ``dt``; ``gamma_f`` overrides sampling
    (e.g. an analytic or cheaper upper estimate for large operators).
    """
    gf = gamma_f if gamma_f is not None else sample_gamma_f(cfg.C, cfg.f, t0, cfg.dt, d.m)
    frob2 = float(np.sum(d.X ** 2))
    bound, notes = time_shift_bound_value(_prefix(gf, d.m), cfg.dt, frob2, d.m)
    measured = spectral_norm(d.Y)
    notes = "; ".join(x for x in (f"gamma={gf.gamma:.6g}, f={gf.f:.6g}", notes) if x)
    return make_report("time_shift", bound, measured, instance=instance, m=d.m, notes=notes)


def _prefix(gf: GammaF, m: int) -> GammaF:
    return GammaF.from_intervals(gf.gamma_i[:m], gf.f_i[:m])


def time_shift_sweep(s: SnapshotSet, gf: GammaF, counts: Sequence[int] | None = None,
                     instance: str = "") -> BoundReport:
    """Time-shift bound for the first ``m`` pairs of ``s`` for each ``m`` in ``counts``.

    ``||Y_m||_2`` comes from the leading block of one Gram matrix, so long
    sweeps over large states stay cheap.
    """
    S = np.asarray(s.states)
    total = s.count - 1
    counts = np.arange(1, total + 1) if counts is None else np.asarray(counts, dtype=int)
    if np.any(counts < 1) or np.any(counts > total) or np.any(counts > gf.gamma_i.size):
        raise IndexError("snapshot counts outside the available range")
    col2 = np.sum(S * S, axis=0)
    Y = S[:, 1:]
    G = Y.T @ Y if total <= s.dim else None
    bound = np.empty(counts.size)
    measured = np.empty(counts.size)
    notes = ""
    for j, m in enumerate(counts):
        bound[j], note = time_shift_bound_value(_prefix(gf, m), s.grid.dt, float(col2[:m].sum()), int(m))
        notes = notes or note
        # the top eigenvalue of the smaller Gram matrix is ||Y_m||_2^2
        H = G[:m, :m] if G is not None else Y[:, :m] @ Y[:, :m].T
        k = H.shape[0] - 1
        top = sla.eigh(H, eigvals_only=True, subset_by_index=[k, k])[0]
        measured[j] = math.sqrt(max(0.0, float(top)))
    return make_report("time_shift", bound, measured, instance=instance, m=counts, notes=notes)


def constant_coefficient_bound(C, d: DataPair, dt: float, instance: str = "") -> BoundReport:
    """``kappa_2(Q) exp(lambda_1 dt) sigma_max(X)`` for constant diagonalisable ``C``
    and no forcing, where ``lambda_1`` is the eigenvalue of largest real part."""
    C = np.asarray(C, dtype=float)
    if not np.all(np.isfinite(C)):
        raise InvalidCoefficient("non-finite coefficient matrix")
    lam, Q = np.linalg.eig(C)
    bound = np.linalg.cond(Q) * math.exp(float(np.max(lam.real)) * dt) * spectral_norm(d.X)
    return make_report("time_shift_constant", bound, spectral_norm(d.Y), instance=instance, m=d.m)


# --- reporting ----------------------------------------------------------------

def write_verification_csv(reports: Sequence[BoundReport], path) -> None:
    """One row per (instance, m): instance, name, m, bound, measured, slack, satisfied."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["instance", "name", "m", "computed_bound", "measured", "slack", "satisfied"])
        for rep in reports:
            b = np.atleast_1d(rep.computed_bound)
            e = np.atleast_1d(rep.measured)
            ms = np.atleast_1d(rep.m if rep.m is not None else -1)
            if ms.size != b.size:
                ms = np.full(b.size, ms[0])
            for mk, bk, ek in zip(ms, b, e):
                ok = bool(ek <= bk + BOUND_RTOL * max(1.0, bk if np.isfinite(bk) else 0.0))
                w.writerow([rep.instance, rep.name, int(mk), repr(float(bk)), repr(float(ek)),
                            repr(float(bk - ek)), int(ok)])
