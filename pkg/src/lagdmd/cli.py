"""Command-line entry point.

Verbs: ``solve``, ``fit``, ``predict``, ``errors``, ``bounds`` and
``reproduce <fig-id>``. Exit codes: 0 ok, 2 configuration error, 3 numeric
failure, 4 bound violation.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import bounds as B
from . import experiments as E
from . import snapshots as snap
from .errors import ConfigError, LagDmdError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_BOUND = 0, 2, 3, 4
log = logging.getLogger("lagdmd")


def _config(args) -> E.ExperimentConfig:
    if not args.config:
        raise ConfigError("--config is required for this verb")
    return E.load_config(args.config, seed=args.seed, output_dir=args.out)


def cmd_solve(args) -> int:
    cfg = _config(args)
    s = E.generate_snapshots(cfg)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    snap.save(s, out / "snapshots.dmds")
    if args.csv:
        snap.to_csv(s, out / "snapshots.csv")
    E.write_provenance(out / "snapshots.json", {"config": cfg.to_dict(), "dim": s.dim,
                                                 "count": s.count})
    log.info("wrote %d snapshots of dimension %d to %s", s.count, s.dim, out)
    return EXIT_OK


def _load_or_solve(cfg: E.ExperimentConfig):
    cached = Path(cfg.output_dir) / "snapshots.dmds"
    if cfg.system != "file" and cached.exists():
        return snap.load(cached)
    return E.generate_snapshots(cfg)


def cmd_fit(args) -> int:
    cfg = _config(args)
    truth = _load_or_solve(cfg)
    a0, a1 = E._span_indices(truth, cfg.train_span, "train_span")
    train = snap.slice_window(truth, a0, a1 - a0 + 1)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for strategy in cfg.strategies:
        fs = E.fit_strategy(strategy, train, cfg)
        E.save_model(fs, out / f"model_{strategy}.npz")
        E.write_model_csv(fs.model, out / f"model_{strategy}.csv")
        log.info("fitted %s: ranks %s", strategy, E._ranks(fs.model))
    return EXIT_OK


def cmd_predict(args) -> int:
    cfg = _config(args)
    out = Path(cfg.output_dir)
    span = cfg.predict_span or cfg.train_span
    for strategy in cfg.strategies:
        path = out / f"model_{strategy}.npz"
        if not path.exists():
            raise ConfigError(f"no fitted model at {path}; run 'fit' first")
        fs = E.load_model(path)
        dt = fs.model.dt
        t0 = fs.t0
        t1 = span[1] if span else t0
        times = t0 + dt * np.arange(int(round((t1 - t0) / dt)) + 1)
        P = fs.predict(times)
        E.write_csv_rows(out / f"prediction_{strategy}.csv",
                         ["t"] + [f"c{k}" for k in range(P.shape[0])],
                         ([repr(float(t))] + [repr(float(x)) for x in P[:, j]]
                          for j, t in enumerate(times)))
    return EXIT_OK


def cmd_errors(args) -> int:
    cfg = _config(args)
    res = E.run_experiment(cfg)
    for name, curve in res.curves.items():
        log.info("%-24s max relative error %.4g", name, float(np.max(curve.rel_errors)))
    return EXIT_OK


def _bound_exit(reports, out: Path, name: str) -> int:
    out.mkdir(parents=True, exist_ok=True)
    B.write_verification_csv(reports, out / f"{name}.csv")
    bad = [r for r in reports if not r.satisfied]
    for r in bad:
        log.error("violated: %s %s bound=%s measured=%s %s", r.name, r.instance,
                  r.computed_bound, r.measured, r.notes)
    log.info("%d reports, %d violations", len(reports), len(bad))
    return EXIT_BOUND if bad else EXIT_OK


def cmd_bounds(args) -> int:
    sizes = tuple(int(x) for x in args.sizes.split(","))
    reports = E.run_bounds_suite(args.seeds, sizes, N=args.N, base_seed=args.seed or 0,
                                 systems=not args.no_systems)
    return _bound_exit(reports, Path(args.out or "out"), "bounds")


def cmd_reproduce(args) -> int:
    fig = args.fig_id
    out = Path(args.out or f"out/{fig}")
    if fig in E.REPRODUCTIONS:
        cfg = E.config_from_text(E.REPRODUCTIONS[fig], seed=args.seed, output_dir=str(out))
        res = E.run_experiment(cfg)
        for name, curve in res.curves.items():
            log.info("%-24s max relative error %.4g", name, float(np.max(curve.rel_errors)))
        return EXIT_OK
    if fig == "bounds":
        return _bound_exit(E.run_bounds_suite(base_seed=args.seed or 0), out, "bounds")
    if fig == "time_shift":
        return _bound_exit(E.system_time_shift_reports(lagrangian_variant=True), out, "time_shift")
    if fig == "prediction_bound":
        return _bound_exit([E.prediction_bound_report()], out, "prediction_bound")
    if fig == "dominance":
        cases = E.dominance_suite(base_seed=args.seed or 0)
        out.mkdir(parents=True, exist_ok=True)
        E.write_csv_rows(out / "dominance.csv",
                         ["seed", "kind", "n", "m", "window", "loss_global", "loss_piecewise", "satisfied"],
                         ([c.seed, c.kind, c.n, c.m, c.window, repr(c.loss_global),
                           repr(c.loss_piecewise), int(c.satisfied)] for c in cases))
        return EXIT_OK if all(c.satisfied for c in cases) else EXIT_BOUND
    raise ConfigError(f"unknown figure {fig!r}; choose from "
                      f"{sorted(E.REPRODUCTIONS) + list(E.BOUND_FIGURES)}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI experiment file")
    common.add_argument("--seed", type=int, default=None, help="random seed (u64)")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="lagdmd", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="verb", required=True)
    s = sub.add_parser("solve", parents=[common], help="generate and store snapshots")
    s.add_argument("--csv", action="store_true", help="also write snapshots.csv")
    s.set_defaults(func=cmd_solve)
    sub.add_parser("fit", parents=[common], help="fit the configured strategies").set_defaults(func=cmd_fit)
    sub.add_parser("predict", parents=[common], help="predict from fitted models").set_defaults(func=cmd_predict)
    sub.add_parser("errors", parents=[common], help="run the full error-curve pipeline").set_defaults(func=cmd_errors)
    b = sub.add_parser("bounds", parents=[common], help="run the bound verification suite")
    b.add_argument("--seeds", type=int, default=10)
    b.add_argument("--sizes", default="5,10,20,40")
    b.add_argument("--N", type=int, default=50)
    b.add_argument("--no-systems", action="store_true", help="skip the reference-system checks")
    b.set_defaults(func=cmd_bounds)
    r = sub.add_parser("reproduce", parents=[common], help="regenerate a named figure's data")
    r.add_argument("fig_id")
    r.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s")
    if args.seed is not None and not 0 <= args.seed < 2**64:
        log.error("seed must be an unsigned 64-bit integer")
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except E.StageError as exc:
        code = EXIT_CONFIG if isinstance(exc.cause, ConfigError) else EXIT_NUMERIC
        log.error("%s", exc)
        return code
    except (LagDmdError, np.linalg.LinAlgError, FloatingPointError) as exc:
        log.error("numeric failure: %s", exc)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
