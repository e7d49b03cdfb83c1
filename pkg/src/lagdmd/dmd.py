"""Standard (projected) dynamic mode decomposition.

The least-squares operator is ``K = Y V_r diag(sigma)^-1 U_r^T`` (that is
``Y X_r^+``); its compression ``Khat = U_r^T K U_r`` drives the spectrum, and
modes are ``Phi = U_r Q`` where ``Khat Q = Q diag(lambda)``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DefectiveOperator, DegenerateInput
from .snapshots import DataPair

DEAD_EIGENVALUE = 1e-14
MAX_EIGVEC_COND = 1e12
_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class TruncatedSvd:
    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray
    tail_energy: float
    full_sigma: np.ndarray

    @property
    def rank(self) -> int:
        return self.sigma.size


def tail_energies(sigma: np.ndarray) -> np.ndarray:
    """``out[r] = sum_{k>r} sigma_k^2 / sum_k sigma_k^2`` for r = 0..len(sigma)."""
    energy = np.asarray(sigma, dtype=float) ** 2
    total = energy.sum()
    # suffix sums are exact zero at r = len(sigma)
    suffix = np.concatenate([np.cumsum(energy[::-1])[::-1], [0.0]])
    return suffix / total


def truncated_svd(X, eps: float | None = None, rank: int | None = None) -> TruncatedSvd:
    """Thin SVD of ``X`` truncated at the smallest rank whose relative tail
    energy is below ``eps`` (or at an explicit ``rank``).

    Singular values below the numerical-rank floor are never retained.
    Singular values tied with the last retained one are kept as well.
    """
    X = np.asarray(X, dtype=float)
    if X.size == 0 or not np.any(X):
        raise DegenerateInput("cannot decompose a zero matrix")
    if eps is None and rank is None:
        raise ValueError("give eps or rank")
    if eps is not None and not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")

    U, s, Vh = np.linalg.svd(X, full_matrices=False)
    floor = s[0] * max(X.shape) * np.finfo(float).eps
    numerical_rank = int(np.count_nonzero(s > floor))
    tails = tail_energies(s)

    if rank is not None:
        if rank < 1:
            raise ValueError("rank must be positive")
        r = min(rank, numerical_rank)
    else:
        r = int(np.argmax(tails < eps))
        r = max(1, min(r, numerical_rank))
    while r < numerical_rank and s[r - 1] - s[r] <= _TIE_RTOL * s[0]:
        r += 1

    return TruncatedSvd(
        U=U[:, :r].copy(),
        sigma=s[:r].copy(),
        V=Vh[:r].T.copy(),
        tail_energy=float(tails[r]),
        full_sigma=s,
    )


@dataclass(frozen=True)
class DmdModel:
    svd: TruncatedSvd
    K_hat: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray
    modes: np.ndarray
    omegas: np.ndarray
    dt: float
    lifted: np.ndarray          # Y V_r diag(sigma)^-1, so that K = lifted @ U_r^T

    @property
    def rank(self) -> int:
        return self.svd.rank

    @property
    def dim(self) -> int:
        return self.modes.shape[0]

    @property
    def dead(self) -> np.ndarray:
        """Modes with (numerically) zero eigenvalue; no continuous frequency."""
        return np.abs(self.eigvals) < DEAD_EIGENVALUE

    def amplitudes(self, x0) -> np.ndarray:
        """``Phi^+ x0``; exact because ``Phi = U_r Q`` with orthonormal ``U_r``."""
        x0 = np.asarray(x0, dtype=float)
        if x0.shape[0] != self.dim:
            raise IndexError(f"state of length {x0.shape[0]}, model dim {self.dim}")
        return np.linalg.solve(self.eigvecs, self.svd.U.T @ x0)

    def propagator(self, t: float) -> np.ndarray:
        """Diagonal of ``exp(t Omega)`` with dead modes set per ``t``."""
        dead = self.dead
        growth = np.exp(np.where(dead, 0.0, self.omegas) * t)
        if t != 0:
            growth[dead] = 0.0
        return growth

    def apply(self, x) -> np.ndarray:
        """One step of the least-squares operator, ``Y X_r^+ x``."""
        return self.lifted @ (self.svd.U.T @ x)

    def operator(self) -> np.ndarray:
        return self.lifted @ self.svd.U.T


def fit_standard(d: DataPair, eps: float | None, dt: float, rank: int | None = None) -> DmdModel:
    svd = truncated_svd(d.X, eps=eps, rank=rank)
    lifted = (d.Y @ svd.V) / svd.sigma
    K_hat = svd.U.T @ lifted
    eigvals, Q = np.linalg.eig(K_hat)
    # eig returns a real array when every eigenvalue is real; the principal log needs complex input
    eigvals = eigvals.astype(complex)
    Q = Q.astype(complex)
    cond = np.linalg.cond(Q)
    if not np.isfinite(cond) or cond > MAX_EIGVEC_COND:
        raise DefectiveOperator(f"eigenvector matrix condition number {cond:.3e}")
    dead = np.abs(eigvals) < DEAD_EIGENVALUE
    with np.errstate(divide="ignore"):
        omegas = np.where(dead, np.nan + 0j, np.log(np.where(dead, 1.0, eigvals)) / dt)
    return DmdModel(
        svd=svd,
        K_hat=K_hat,
        eigvals=eigvals,
        eigvecs=Q,
        modes=svd.U @ Q,
        omegas=omegas,
        dt=float(dt),
        lifted=lifted,
    )


def predict_at(model: DmdModel, x0, t) -> np.ndarray:
    """``Re(Phi exp(t Omega) Phi^+ x0)``; ``t`` may be a scalar or an array of
    times (relative to the time of ``x0``), giving one column per time."""
    b = model.amplitudes(x0)
    times = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(times < 0):
        raise ValueError("prediction time must be non-negative")
    growth = np.stack([model.propagator(tk) for tk in times], axis=1)
    out = (model.modes @ (growth * b[:, None])).real
    return out[:, 0] if np.ndim(t) == 0 else out


def predict_steps(model: DmdModel, x0, k: int) -> np.ndarray:
    """``Re(Phi Lambda^k Phi^+ x0)`` by integer powers of the eigenvalues."""
    b = model.amplitudes(x0)
    return (model.modes @ (model.eigvals ** k * b)).real


def mse_loss(K_apply, d: DataPair) -> float:
    """``(1/m) sum_i ||y_i - K x_i||^2``; ``K_apply`` is a matrix, a model or a callable."""
    if isinstance(K_apply, DmdModel):
        KX = K_apply.apply(d.X)
    elif callable(K_apply):
        KX = K_apply(d.X)
    else:
        K = np.asarray(K_apply)
        if K.shape != (d.Y.shape[0], d.X.shape[0]):
            raise ValueError(f"operator shape {K.shape} does not match data {d.X.shape}")
        KX = K @ d.X
    R = d.Y - KX
    return float(np.sum(R * R) / d.m)


def write_spectrum_csv(model: DmdModel, x0, path) -> None:
    b = model.amplitudes(x0)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["mode", "lambda_re", "lambda_im", "omega_re", "omega_im",
                    "amp_re", "amp_im", "amp_abs"])
        for k in np.argsort(-np.abs(b), kind="stable"):
            lam, om, a = model.eigvals[k], model.omegas[k], b[k]
            w.writerow([int(k)] + [repr(float(x)) for x in
                                   (lam.real, lam.imag, om.real, om.imag, a.real, a.imag, abs(a))])
