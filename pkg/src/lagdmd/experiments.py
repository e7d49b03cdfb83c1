"""Configuration-driven experiments: generate snapshots, fit one or more DMD
strategies, score predictions against the solver truth and write CSV
artifacts. Also hosts the randomized verification suites for the bounds and
for the piecewise-versus-global training loss.
"""
from __future__ import annotations

import configparser
import csv
import dataclasses
import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy
import scipy.sparse as sp

from . import bounds as B
from . import snapshots as snap
from .dmd import DmdModel, TruncatedSvd, fit_standard, predict_at
from .dmd import write_spectrum_csv as write_standard_spectrum
from .errors import ConfigError, DegenerateReference, LagDmdError
from .lagrangian import (VelocityEstimate, estimate_velocity, to_eulerian, to_lagrangian,
                         write_velocity_csv)
from .snapshots import DataPair, SnapshotSet, build_data_pair, slice_window
from .solvers import (AdvDiff2dConfig, Advection1dConfig, LinearSystemConfig,
                      NavierStokesConfig, solve_advdiff_2d, solve_advection_1d,
                      solve_linear_system, solve_navier_stokes)
from .solvers.advdiff2d import semi_discrete_operator as advdiff_operator
from .solvers.profiles import INITIAL_1D, INITIAL_2D, VELOCITY
from .timevarying import (PiecewiseDmdModel, fit_piecewise, loss_dominance_report,
                          predict_chained)
from .timevarying import write_spectrum_csv as write_piecewise_spectrum

STRATEGIES = ("standard", "time_varying", "lagrangian", "lagrangian_time_varying")
SYSTEMS = ("advection1d", "advdiff2d", "navier_stokes", "linear", "file")
MIN_REFERENCE_NORM = 1e-14
log = logging.getLogger(__name__)


class StageError(LagDmdError):
    """Failure inside one pipeline stage; ``cause`` holds the original error."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


def relative_error(pred, truth) -> float:
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    ref = float(np.linalg.norm(truth))
    if not ref > MIN_REFERENCE_NORM:
        raise DegenerateReference(f"reference norm {ref:.3e} too small")
    return float(np.linalg.norm(pred - truth)) / ref


@dataclass(frozen=True)
class ErrorCurve:
    strategy: str
    times: np.ndarray
    rel_errors: np.ndarray

    def at(self, t: float) -> float:
        """Error at the sample nearest to ``t``."""
        return float(self.rel_errors[int(np.argmin(np.abs(self.times - t)))])


# --- configuration -------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    system: str
    solver: object = None
    snapshot_path: str | None = None
    strategies: tuple[str, ...] = ("standard",)
    eps: float = 1e-6
    window: int | None = None
    train_span: tuple[float, float] | None = None
    predict_span: tuple[float, float] | None = None
    output_dir: str = "out"
    seed: int = 0
    sample_every: int = 1

    def __post_init__(self):
        if self.system not in SYSTEMS:
            raise ConfigError(f"unknown system {self.system!r}; choose from {SYSTEMS}")
        bad = [s for s in self.strategies if s not in STRATEGIES]
        if bad or not self.strategies:
            raise ConfigError(f"unknown strategy {bad}; choose from {STRATEGIES}")
        if not 0.0 < self.eps < 1.0:
            raise ConfigError(f"eps must lie in (0, 1), got {self.eps}")
        needs_window = any(s.endswith("time_varying") for s in self.strategies)
        if needs_window and (self.window is None or self.window < 2):
            raise ConfigError("time-varying strategies need window >= 2")
        if any(s.startswith("lagrangian") for s in self.strategies) and \
                self.system not in ("advection1d", "advdiff2d"):
            raise ConfigError(f"Lagrangian strategies need a scalar transport system, not {self.system}")
        if self.system == "file" and not self.snapshot_path:
            raise ConfigError("system 'file' needs a snapshot path")
        if self.sample_every < 1:
            raise ConfigError("sample_every must be positive")
        for name in ("train_span", "predict_span"):
            span = getattr(self, name)
            if span is not None and not span[1] > span[0]:
                raise ConfigError(f"{name} must be an increasing pair, got {span}")

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "solver"}
        if self.solver is not None:
            d["solver"] = _describe(self.solver)
        return d


def _describe(obj) -> dict:
    out = {}
    for f in dataclasses.fields(obj):
        v = getattr(obj, f.name)
        out[f.name] = getattr(v, "__name__", v) if callable(v) else v
    return out


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(",", " ").split())


def _velocity(name: str):
    try:
        return VELOCITY[name]
    except KeyError:
        raise ConfigError(f"unknown velocity profile {name!r}; choose from {sorted(VELOCITY)}") from None


def _solver_from_section(system: str, sec) -> object:
    """Build a solver config from an INI section, leaving unset keys at their defaults."""
    kw = {}
    try:
        if system == "advection1d":
            for k in ("c", "omega", "dx", "dt", "t_final"):
                if k in sec:
                    kw[k] = sec.getfloat(k)
            if "x_range" in sec:
                kw["x_range"] = _floats(sec["x_range"])
            if "initial" in sec:
                if sec["initial"] not in INITIAL_1D:
                    raise ConfigError(f"unknown initial profile {sec['initial']!r}")
                kw["initial"] = sec["initial"]
            return Advection1dConfig(**kw)
        if system == "advdiff2d":
            for k in ("D", "dt", "t_final"):
                if k in sec:
                    kw[k] = sec.getfloat(k)
            for k in ("nx", "ny"):
                if k in sec:
                    kw[k] = sec.getint(k)
            for k in ("x_range", "y_range"):
                if k in sec:
                    kw[k] = _floats(sec[k])
            for k in ("vx", "vy"):
                if k in sec:
                    kw[k] = _velocity(sec[k])
            if "initial" in sec:
                if sec["initial"] not in INITIAL_2D:
                    raise ConfigError(f"unknown initial profile {sec['initial']!r}")
                kw["initial"] = sec["initial"]
            return AdvDiff2dConfig(**kw)
        if system == "navier_stokes":
            for k in ("rho", "nu", "Lx", "Ly", "cylinder_radius", "dx", "dt", "t_final", "inflow"):
                if k in sec:
                    kw[k] = sec.getfloat(k)
            if "cylinder_center" in sec:
                kw["cylinder_center"] = _floats(sec["cylinder_center"])
            if "walls" in sec:
                kw["walls"] = sec["walls"]
            if "save_every" in sec:
                kw["save_every"] = sec.getint("save_every")
            return NavierStokesConfig(**kw)
        if system == "linear":
            from .solvers.linear import rotation_matrix
            eps = sec.getfloat("epsilon", 0.1)
            kw["C"] = rotation_matrix(eps)
            for k in ("dt", "t_final"):
                if k in sec:
                    kw[k] = sec.getfloat(k)
            if "x0" in sec:
                kw["x0"] = _floats(sec["x0"])
            return LinearSystemConfig(**kw)
    except ValueError as exc:
        raise ConfigError(f"[{system}] {exc}") from exc
    return None


def load_config(path, seed: int | None = None, output_dir: str | None = None) -> ExperimentConfig:
    """Parse an INI experiment file; ``seed``/``output_dir`` override the file."""
    cp = configparser.ConfigParser()
    cp.optionxform = str
    try:
        if not cp.read(path):
            raise ConfigError(f"cannot read config {path}")
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    return config_from_parser(cp, seed=seed, output_dir=output_dir)


def config_from_text(text: str, seed: int | None = None, output_dir: str | None = None) -> ExperimentConfig:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    return config_from_parser(cp, seed=seed, output_dir=output_dir)


def config_from_parser(cp, seed=None, output_dir=None) -> ExperimentConfig:
    if "experiment" not in cp:
        raise ConfigError("missing [experiment] section")
    ex = cp["experiment"]
    try:
        system = ex.get("system", "")
        strategy = ex.get("strategy", "standard").strip()
        strategies = STRATEGIES if strategy == "all" else tuple(
            s.strip() for s in strategy.split(",") if s.strip())
        if system in SYSTEMS and system not in cp:
            cp.add_section(system)
        sec = cp[system] if system in cp else None
        solver = _solver_from_section(system, sec) if system != "file" else None
        spans = {k: _floats(ex[k]) for k in ("train_span", "predict_span") if k in ex}
        for k, v in spans.items():
            if len(v) != 2:
                raise ConfigError(f"{k} needs two numbers")
        return ExperimentConfig(
            system=system,
            solver=solver,
            snapshot_path=ex.get("snapshots") or (sec.get("path") if system == "file" else None),
            strategies=strategies,
            eps=ex.getfloat("eps", 1e-6),
            window=ex.getint("window") if "window" in ex else None,
            train_span=spans.get("train_span"),
            predict_span=spans.get("predict_span"),
            output_dir=output_dir or ex.get("output_dir", "out"),
            seed=seed if seed is not None else ex.getint("seed", 0),
            sample_every=ex.getint("sample_every", 1),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


# --- pipeline --------------------------------------------------------------------

def generate_snapshots(cfg: ExperimentConfig) -> SnapshotSet:
    if cfg.system == "advection1d":
        return solve_advection_1d(cfg.solver)
    if cfg.system == "advdiff2d":
        return solve_advdiff_2d(cfg.solver)
    if cfg.system == "navier_stokes":
        return solve_navier_stokes(cfg.solver)
    if cfg.system == "linear":
        return solve_linear_system(cfg.solver)
    return snap.load(cfg.snapshot_path)


def eulerian_axes(cfg: ExperimentConfig) -> tuple[np.ndarray, ...]:
    if cfg.system == "advection1d":
        return (cfg.solver.x,)
    if cfg.system == "advdiff2d":
        return (cfg.solver.x, cfg.solver.y)
    raise ConfigError(f"{cfg.system} has no transport grid")


def _span_indices(s: SnapshotSet, span, name: str) -> tuple[int, int]:
    if span is None:
        return 0, s.count - 1
    i0 = int(round((span[0] - s.grid.t0) / s.grid.dt))
    i1 = int(round((span[1] - s.grid.t0) / s.grid.dt))
    if i0 < 0 or i1 > s.count - 1 or i1 <= i0:
        raise ConfigError(f"{name} {span} outside the solver range "
                          f"[{s.grid.t0}, {s.grid.t_final}]")
    return i0, i1


@dataclass
class FittedStrategy:
    strategy: str
    model: DmdModel | PiecewiseDmdModel
    w0: np.ndarray
    t0: float
    sizes: tuple[int, ...] | None = None
    axes: tuple[np.ndarray, ...] | None = None
    velocity: VelocityEstimate | None = None

    def predict(self, times) -> np.ndarray:
        """Eulerian prediction, one column per absolute time."""
        times = np.asarray(times, dtype=float)
        if isinstance(self.model, PiecewiseDmdModel):
            W = predict_chained(self.model, self.w0, times)
        else:
            W = predict_at(self.model, self.w0, times - self.t0)
        if self.sizes is None:
            return W
        return np.stack([to_eulerian(W[:, j], self.sizes, self.axes)
                         for j in range(W.shape[1])], axis=1)


def fit_strategy(strategy: str, train: SnapshotSet, cfg: ExperimentConfig) -> FittedStrategy:
    lagrangian = strategy.startswith("lagrangian")
    sizes = axes = velocity = None
    data = train
    if lagrangian:
        axes = eulerian_axes(cfg)
        sizes = tuple(len(a) for a in axes)
        velocity = estimate_velocity(train, axes)
        data = to_lagrangian(train, axes, velocity)
        log.info("%s: Eulerian state dim %d, Lagrangian state dim %d",
                 strategy, train.dim, data.dim)
    if strategy.endswith("time_varying"):
        model = fit_piecewise(data, cfg.window, cfg.eps)
    else:
        model = fit_standard(build_data_pair(data), cfg.eps, data.grid.dt)
    return FittedStrategy(strategy, model, np.array(data.states[:, 0]), data.grid.t0,
                          sizes, axes, velocity)


def _curve(fs: FittedStrategy, truth: SnapshotSet, idx: np.ndarray) -> ErrorCurve:
    times = truth.times[idx]
    P = fs.predict(times)
    keep, errs = [], []
    for j, k in enumerate(idx):
        ref = truth.states[:, k]
        if np.linalg.norm(ref) > MIN_REFERENCE_NORM:
            keep.append(j)
            errs.append(relative_error(P[:, j], ref))
    return ErrorCurve(fs.strategy, times[keep], np.asarray(errs))


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    curves: dict[str, ErrorCurve]
    fitted: dict[str, FittedStrategy]
    artifacts: list[Path] = field(default_factory=list)


class _Artifacts:
    """Tracks written files so a failed run leaves nothing half-written."""

    def __init__(self, out: Path):
        self.out = out
        self.paths: list[Path] = []
        self.created_dir = not out.exists()

    def path(self, name: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        p = self.out / name
        self.paths.append(p)
        return p

    def discard(self):
        for p in self.paths:
            if p.exists():
                p.unlink()
        if self.created_dir and self.out.exists() and not any(self.out.iterdir()):
            self.out.rmdir()


def _stage(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except StageError:
        raise
    except (LagDmdError, np.linalg.LinAlgError, FloatingPointError) as exc:
        raise StageError(name, exc) from exc


def run_experiment(cfg: ExperimentConfig, snapshots: SnapshotSet | None = None,
                   write: bool = True) -> ExperimentResult:
    """Solve, fit each configured strategy, predict, score and write artifacts."""
    art = _Artifacts(Path(cfg.output_dir))
    try:
        truth = snapshots if snapshots is not None else _stage("solve", generate_snapshots, cfg)
        a0, a1 = _span_indices(truth, cfg.train_span, "train_span")
        p0, p1 = _span_indices(truth, cfg.predict_span, "predict_span")
        if p0 != a0:
            raise ConfigError("train_span and predict_span must start together")
        train = slice_window(truth, a0, a1 - a0 + 1)
        idx = np.arange(p0, p1 + 1, cfg.sample_every)
        if idx[-1] != p1:
            idx = np.append(idx, p1)

        curves, fitted = {}, {}
        for strategy in cfg.strategies:
            with warnings.catch_warnings():
                warnings.simplefilter("default")
                fs = _stage(f"fit[{strategy}]", fit_strategy, strategy, train, cfg)
            fitted[strategy] = fs
            curves[strategy] = _stage(f"predict[{strategy}]", _curve, fs, truth, idx)

        result = ExperimentResult(cfg, curves, fitted)
        if write:
            _write_artifacts(result, art)
            result.artifacts = list(art.paths)
        return result
    except BaseException:
        art.discard()
        raise


def _write_artifacts(result: ExperimentResult, art: _Artifacts) -> None:
    curves = result.curves
    first = next(iter(curves.values()))
    with open(art.path("errors.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + list(curves))
        # all curves share sample times unless a reference vanished somewhere
        common = first.times
        for j, t in enumerate(common):
            w.writerow([repr(float(t))] + [repr(float(c.rel_errors[j])) if j < c.times.size and
                                           c.times[j] == t else "" for c in curves.values()])
    for name, fs in result.fitted.items():
        if isinstance(fs.model, PiecewiseDmdModel):
            write_piecewise_spectrum(fs.model, art.path(f"spectrum_{name}.csv"))
        else:
            write_standard_spectrum(fs.model, fs.w0, art.path(f"spectrum_{name}.csv"))
        write_model_csv(fs.model, art.path(f"model_{name}.csv"))
        if fs.velocity is not None:
            write_velocity_csv(fs.velocity, art.path(f"velocity_{name}.csv"))
        save_model(fs, art.path(f"model_{name}.npz"))
    prov = {
        "config": result.config.to_dict(),
        "strategies": list(curves),
        "ranks": {k: _ranks(fs.model) for k, fs in result.fitted.items()},
        "max_error": {k: float(np.max(c.rel_errors)) for k, c in curves.items()},
    }
    write_provenance(art.path("provenance.json"), prov)


def write_provenance(path, payload: dict) -> None:
    payload = dict(payload, versions={"numpy": np.__version__, "scipy": scipy.__version__})
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    return str(o)


def _ranks(model) -> list[int]:
    if isinstance(model, PiecewiseDmdModel):
        return [m.rank for m in model.models]
    return [model.rank]


def write_model_csv(model, path) -> None:
    """One row per window (a single row for a global model)."""
    if isinstance(model, PiecewiseDmdModel):
        rows = zip(range(model.p), model.start_times, model.boundaries, model.models)
    else:
        rows = [(0, math.nan, math.nan, model)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["window", "t_start", "t_end", "rank", "tail_energy", "max_abs_eigenvalue"])
        for i, ta, tb, m in rows:
            w.writerow([i, repr(float(ta)), repr(float(tb)), m.rank, repr(m.svd.tail_energy),
                        repr(float(np.max(np.abs(m.eigvals))))])


# --- model persistence -------------------------------------------------------------

def _pack(prefix: str, m: DmdModel, out: dict) -> None:
    out[prefix + "U"] = m.svd.U
    out[prefix + "sigma"] = m.svd.sigma
    out[prefix + "V"] = m.svd.V
    out[prefix + "full_sigma"] = m.svd.full_sigma
    out[prefix + "tail"] = np.array(m.svd.tail_energy)
    out[prefix + "K_hat"] = m.K_hat
    out[prefix + "eigvals"] = m.eigvals
    out[prefix + "eigvecs"] = m.eigvecs
    out[prefix + "omegas"] = m.omegas
    out[prefix + "dt"] = np.array(m.dt)
    out[prefix + "lifted"] = m.lifted


def _unpack(prefix: str, z) -> DmdModel:
    svd = TruncatedSvd(z[prefix + "U"], z[prefix + "sigma"], z[prefix + "V"],
                       float(z[prefix + "tail"]), z[prefix + "full_sigma"])
    return DmdModel(svd=svd, K_hat=z[prefix + "K_hat"], eigvals=z[prefix + "eigvals"],
                    eigvecs=z[prefix + "eigvecs"], modes=svd.U @ z[prefix + "eigvecs"],
                    omegas=z[prefix + "omegas"], dt=float(z[prefix + "dt"]),
                    lifted=z[prefix + "lifted"])


def save_model(fs: FittedStrategy, path) -> None:
    out = {"strategy": np.array(fs.strategy), "w0": fs.w0, "t0": np.array(fs.t0)}
    if fs.sizes is not None:
        out["sizes"] = np.array(fs.sizes)
        for k, a in enumerate(fs.axes):
            out[f"axis{k}"] = a
    if isinstance(fs.model, PiecewiseDmdModel):
        pm = fs.model
        out.update(p=np.array(pm.p), pw_t0=np.array(pm.t0), pw_dt=np.array(pm.dt),
                   starts=pm.starts, lengths=pm.lengths, window=np.array(pm.window))
        for i, m in enumerate(pm.models):
            _pack(f"w{i}_", m, out)
            out[f"w{i}_amp"] = pm.amplitudes[i]
    else:
        _pack("g_", fs.model, out)
    with open(path, "wb") as fh:
        np.savez(fh, **out)


def load_model(path) -> FittedStrategy:
    with np.load(path, allow_pickle=False) as z:
        sizes = axes = None
        if "sizes" in z:
            sizes = tuple(int(n) for n in z["sizes"])
            axes = tuple(z[f"axis{k}"] for k in range(len(sizes)))
        if "p" in z:
            p = int(z["p"])
            model = PiecewiseDmdModel(
                t0=float(z["pw_t0"]), dt=float(z["pw_dt"]), starts=z["starts"], lengths=z["lengths"],
                models=tuple(_unpack(f"w{i}_", z) for i in range(p)), window=int(z["window"]),
                amplitudes=tuple(z[f"w{i}_amp"] for i in range(p)))
        else:
            model = _unpack("g_", z)
        return FittedStrategy(str(z["strategy"]), model, z["w0"], float(z["t0"]), sizes, axes)


# --- randomized verification ----------------------------------------------------------

def random_linear_trajectory(rng: np.random.Generator, n: int, m: int, noise: float = 1e-3) -> SnapshotSet:
    """Noisy trajectory of a random stable linear map."""
    A = rng.standard_normal((n, n))
    A *= 0.98 / max(1e-12, np.max(np.abs(np.linalg.eigvals(A))))
    x = rng.standard_normal(n)
    out = np.empty((n, m + 1))
    for i in range(m + 1):
        out[:, i] = x + noise * rng.standard_normal(n)
        x = A @ x
    return SnapshotSet.from_states(out, dt=0.01)


def random_piecewise_trajectory(rng: np.random.Generator, n: int, m: int, pieces: int,
                                noise: float = 1e-3) -> SnapshotSet:
    """Noisy trajectory switching between random near-orthogonal maps."""
    maps = []
    for _ in range(pieces):
        Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        maps.append(0.99 * Q)
    x = rng.standard_normal(n)
    out = np.empty((n, m + 1))
    switch = np.sort(rng.choice(np.arange(1, m), size=pieces - 1, replace=False)) if pieces > 1 else []
    k = 0
    for i in range(m + 1):
        out[:, i] = x + noise * rng.standard_normal(n)
        while k < len(switch) and i >= switch[k]:
            k += 1
        x = maps[k] @ x
    return SnapshotSet.from_states(out, dt=0.01)


@dataclass(frozen=True)
class DominanceCase:
    seed: int
    kind: str
    n: int
    m: int
    window: int
    loss_global: float
    loss_piecewise: float

    @property
    def satisfied(self) -> bool:
        return self.loss_piecewise <= self.loss_global * (1.0 + 1e-12)


def dominance_suite(seeds: int = 10, per_seed: int = 10, base_seed: int = 0) -> list[DominanceCase]:
    """Untruncated piecewise versus global training loss on random trajectories."""
    cases = []
    for seed in range(seeds):
        rng = np.random.default_rng([base_seed, seed])
        for j in range(per_seed):
            n = int(rng.integers(3, 30))
            m = int(rng.integers(40, 160))
            window = int(rng.integers(2, 40))
            if j % 2 == 0:
                kind, s = "linear", random_linear_trajectory(rng, n, m)
            else:
                kind, s = "piecewise", random_piecewise_trajectory(rng, n, m, int(rng.integers(2, 5)))
            lg, lp = loss_dominance_report(s, window, eps=None)
            cases.append(DominanceCase(seed, kind, n, m, window, float(lg), float(lp)))
    return cases


def _gaussian_instance(rng, N, m):
    X = rng.standard_normal((N, m + 1))
    Y = rng.standard_normal((N, m + 1))
    return X, Y


def gaussian_bound_reports(seed_count: int = 10, sizes: Sequence[int] = (5, 10, 20, 40),
                           N: int = 50, base_seed: int = 0) -> list[B.BoundReport]:
    """Rank-truncation, pointwise-rank and column-deletion checks on Gaussian data."""
    if seed_count < 1:
        raise ConfigError("seed_count must be at least 1")
    for m in sizes:
        if m < 1 or m + 1 > N:
            raise ConfigError(f"m={m} needs N >= m + 1 for a full-column-rank instance (N={N})")
    reports = []
    for seed in range(seed_count):
        rng = np.random.default_rng([base_seed, seed])
        for m in sizes:
            tag = f"seed{seed}-N{N}-m{m}"
            X, Y = _gaussian_instance(rng, N, m)
            Xm, Ym, u, v = X[:, :m], Y[:, :m], X[:, m], Y[:, m]
            d = DataPair(Xm, Ym)
            r = max(1, m // 2)
            reports.append(B.rank_truncation_bound(d, r, instance=tag))
            reports.append(B.pointwise_rank_bound(d, r, rng.standard_normal(N), instance=tag))
            reports.append(B.column_deletion_bound(Xm, Ym, u, v, instance=tag))
            Q, _ = np.linalg.qr(Xm)
            u_perp = u - Q @ (Q.T @ u)
            u_perp -= Q @ (Q.T @ u_perp)
            reports.append(B.column_deletion_bound(Xm, Ym, u_perp, v, instance=tag))
    return reports


def _upwind_unit_norm(cfg: Advection1dConfig) -> float:
    """``||C||_2`` of the upwind operator at unit speed; by reflection symmetry
    it is the same for either sign of the velocity."""
    n = cfg.n
    unit = sp.diags([-np.ones(n), np.ones(n - 1)], [0, -1], format="csr") / cfg.dx
    return B.spectral_norm(unit)


def advection_1d_lipschitz(cfg: Advection1dConfig, points: int = 10001) -> B.LipschitzData:
    """``max_t ||C(t)||_2`` over ``[0, t_final]`` by dense sampling of ``|v(t)|``."""
    vmax = np.max(np.abs(cfg.velocity(np.linspace(0.0, cfg.t_final, points))))
    return B.LipschitzData(L=_upwind_unit_norm(cfg) * float(vmax), source="estimated")


def advection_1d_gamma(cfg: Advection1dConfig, m: int, points: int = B.GAMMA_POINTS) -> B.GammaF:
    """Per-step ``max ||C(s)||_2`` for the upwind operator, which is ``|v(s)|``
    times a fixed matrix."""
    norm = _upwind_unit_norm(cfg)
    s = cfg.dt * (np.arange(m)[:, None] + np.linspace(0.0, 1.0, points)[None, :])
    vmax = np.max(np.abs(cfg.velocity(s)), axis=1)
    return B.GammaF.from_intervals(B.GAMMA_INFLATION * norm * vmax, np.zeros(m))


def advdiff_2d_gamma(cfg: AdvDiff2dConfig, m: int, points: int = B.GAMMA_POINTS) -> B.GammaF:
    """Per-step upper estimate of ``||C(s)||_2`` by the triangle inequality over
    the x-advection, y-advection and diffusion parts."""
    zero = VELOCITY["zero"]
    unit_x = advdiff_operator(dataclasses.replace(cfg, vx=lambda t: 1.0, vy=zero, D=0.0), 0.0)
    unit_y = advdiff_operator(dataclasses.replace(cfg, vx=zero, vy=lambda t: 1.0, D=0.0), 0.0)
    diff = advdiff_operator(dataclasses.replace(cfg, vx=zero, vy=zero), 0.0)
    nx_, ny_, nd = (B.spectral_norm(A) for A in (unit_x, unit_y, diff))
    s = cfg.dt * (np.arange(m)[:, None] + np.linspace(0.0, 1.0, points)[None, :])
    g = np.abs(cfg.vx(s)) * nx_ + np.abs(cfg.vy(s)) * ny_ + nd
    return B.GammaF.from_intervals(B.GAMMA_INFLATION * np.max(g, axis=1), np.zeros(m))


def system_time_shift_reports(stride_1d: int = 10, stride_2d: int = 25,
                              lagrangian_variant: bool = False) -> list[B.BoundReport]:
    """Time-shift bound swept over the snapshot count on the three reference systems."""
    reports = []
    lin = LinearSystemConfig()
    s = solve_linear_system(lin)
    gf = B.sample_gamma_f(lin.C, lin.f, 0.0, lin.dt, s.count - 1)
    reports.append(B.time_shift_sweep(s, gf, instance="linear2x2"))

    a1 = Advection1dConfig()
    s = solve_advection_1d(a1)
    gf = advection_1d_gamma(a1, s.count - 1)
    counts = np.unique(np.r_[1, np.arange(stride_1d, s.count, stride_1d), s.count - 1])
    reports.append(B.time_shift_sweep(s, gf, counts, instance="advection1d"))

    a2 = AdvDiff2dConfig()
    s = solve_advdiff_2d(a2)
    gf = advdiff_2d_gamma(a2, s.count - 1)
    counts = np.unique(np.r_[1, np.arange(stride_2d, s.count, stride_2d), s.count - 1])
    reports.append(B.time_shift_sweep(s, gf, counts, instance="advdiff2d"))
    if lagrangian_variant:
        axes = (a2.x, a2.y)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            L = to_lagrangian(s, axes, estimate_velocity(s, axes))
        reports.append(B.time_shift_sweep(L, gf, counts, instance="advdiff2d-lagrangian"))

    C = np.diag([-1.0, -2.0])
    lin_c = LinearSystemConfig(C=lambda t: C, x0=(1.0, 1.0))
    reports.append(B.constant_coefficient_bound(C, build_data_pair(solve_linear_system(lin_c)),
                                                lin_c.dt, instance="diag(-1,-2)"))
    return reports


def run_bounds_suite(seed_count: int = 10, sizes: Sequence[int] = (5, 10, 20, 40), N: int = 50,
                     base_seed: int = 0, systems: bool = True) -> list[B.BoundReport]:
    reports = gaussian_bound_reports(seed_count, sizes, N, base_seed)
    if systems:
        reports += system_time_shift_reports()
    return reports


def prediction_bound_report(eps: float = 1e-6, window: int = 5) -> B.BoundReport:
    """Recursive pointwise bound against the chained error on 1D advection."""
    cfg = Advection1dConfig()
    s = solve_advection_1d(cfg)
    model = fit_piecewise(s, window, eps)
    L = advection_1d_lipschitz(cfg)
    return B.pointwise_error_bound(model, s, L)


def write_csv_rows(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


# --- named reproductions -------------------------------------------------------------

REPRODUCTIONS = {
    "advection1d": """
[experiment]
system = advection1d
strategy = all
eps = 1e-6
window = 5
train_span = 0, 8
predict_span = 0, 8
""",
    "advdiff2d": """
[experiment]
system = advdiff2d
strategy = all
eps = 1e-6
window = 30
train_span = 0, 8
predict_span = 0, 8
sample_every = 10
""",
    "navier_stokes": """
[experiment]
system = navier_stokes
strategy = standard, time_varying
eps = 1e-2
window = 50
train_span = 0, 1.5
predict_span = 0, 1.5
sample_every = 10
[navier_stokes]
dx = 0.04
t_final = 1.5
""",
    "navier_stokes_full": """
[experiment]
system = navier_stokes
strategy = standard, time_varying
eps = 1e-2
window = 50
train_span = 0, 3
predict_span = 0, 3
sample_every = 10
""",
}
BOUND_FIGURES = ("bounds", "time_shift", "prediction_bound", "dominance")
