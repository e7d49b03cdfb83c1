import json

import numpy as np
import pytest

from lagdmd import cli
from lagdmd import experiments as E
from lagdmd.bounds import make_report
from lagdmd.errors import ConfigError, DegenerateReference, LagDmdError

SMALL_1D = """
[experiment]
system = advection1d
strategy = all
eps = 1e-6
window = 5
train_span = 0, 1
predict_span = 0, 1.5
sample_every = 5
[advection1d]
dx = 0.1
t_final = 2
"""


def test_relative_error_examples():
    assert E.relative_error([1.0, 0.0], [1.0, 0.0]) == 0.0
    assert E.relative_error([0.0, 0.0], [3.0, 4.0]) == 1.0
    assert E.relative_error([1.1, 0.0], [1.0, 0.0]) == pytest.approx(0.1)
    with pytest.raises(DegenerateReference):
        E.relative_error([1.0], [0.0])


def test_config_parsing():
    cfg = E.config_from_text(SMALL_1D, seed=7, output_dir="x")
    assert cfg.strategies == E.STRATEGIES
    assert cfg.solver.dx == 0.1 and cfg.solver.n == 200
    assert cfg.train_span == (0.0, 1.0) and cfg.seed == 7 and cfg.output_dir == "x"
    assert json.dumps(cfg.to_dict(), default=str)


@pytest.mark.parametrize("text", [
    "[other]\nx = 1",
    "[experiment]\nsystem = weather",
    "[experiment]\nsystem = linear\nstrategy = magic",
    "[experiment]\nsystem = linear\nstrategy = time_varying",
    "[experiment]\nsystem = linear\neps = 2",
    "[experiment]\nsystem = navier_stokes\nstrategy = lagrangian",
    "[experiment]\nsystem = linear\ntrain_span = 1, 0",
    "[experiment]\nsystem = linear\ntrain_span = 1",
    "[experiment]\nsystem = file",
    "[experiment]\nsystem = advection1d\n[advection1d]\ndx = abc",
    "[experiment]\nsystem = advdiff2d\n[advdiff2d]\nvx = unknown",
    "not an ini file",
])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        E.config_from_text(text)


def test_run_experiment_writes_and_reproduces(tmp_path, quiet_extrapolation):
    outs = []
    for name in ("a", "b"):
        cfg = E.config_from_text(SMALL_1D, output_dir=str(tmp_path / name))
        res = E.run_experiment(cfg)
        outs.append(res)
    names = sorted(p.name for p in outs[0].artifacts)
    assert "errors.csv" in names and "provenance.json" in names
    assert "velocity_lagrangian.csv" in names and "spectrum_time_varying.csv" in names
    for n in names:
        if n.endswith(".csv"):
            assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes(), n
    curve = outs[0].curves["time_varying"]
    assert curve.times[-1] == pytest.approx(1.5)
    # at t0 the prediction is the rank-truncated projection of the initial state
    assert curve.at(0.0) < 1e-3


def test_failed_run_leaves_nothing(tmp_path, monkeypatch, quiet_extrapolation):
    def boom(*a, **k):
        raise LagDmdError("disk on fire")
    monkeypatch.setattr(E, "save_model", boom)
    out = tmp_path / "run"
    with pytest.raises(LagDmdError):
        E.run_experiment(E.config_from_text(SMALL_1D, output_dir=str(out)))
    assert not out.exists()


def test_spans_must_start_together(tmp_path):
    text = SMALL_1D.replace("predict_span = 0, 1.5", "predict_span = 0.5, 1.5")
    with pytest.raises(ConfigError):
        E.run_experiment(E.config_from_text(text, output_dir=str(tmp_path)))


def test_model_round_trip(tmp_path, quiet_extrapolation):
    cfg = E.config_from_text(SMALL_1D, output_dir=str(tmp_path))
    truth = E.generate_snapshots(cfg)
    train = truth.__class__(truth.grid.__class__(0.0, truth.grid.dt, 101), truth.states[:, :101])
    times = truth.times[:120]
    for strategy in E.STRATEGIES:
        fs = E.fit_strategy(strategy, train, cfg)
        E.save_model(fs, tmp_path / f"{strategy}.npz")
        back = E.load_model(tmp_path / f"{strategy}.npz")
        np.testing.assert_array_equal(back.predict(times), fs.predict(times))


def test_small_bounds_suite():
    reps = E.run_bounds_suite(seed_count=1, sizes=(2,), N=4, systems=False)
    assert len(reps) == 4 and all(r.satisfied for r in reps)
    with pytest.raises(ConfigError):
        E.run_bounds_suite(seed_count=1, sizes=(5,), N=4, systems=False)


def test_dominance_case_fields():
    cases = E.dominance_suite(seeds=1, per_seed=2)
    assert [c.kind for c in cases] == ["linear", "piecewise"]
    assert all(c.satisfied for c in cases)


# --- command line ------------------------------------------------------------------

def write_cfg(tmp_path, text=SMALL_1D):
    p = tmp_path / "exp.ini"
    p.write_text(text)
    return str(p)


def test_cli_solve_fit_predict(tmp_path, quiet_extrapolation):
    cfg, out = write_cfg(tmp_path), str(tmp_path / "out")
    assert cli.main(["solve", "--config", cfg, "--out", out, "--csv"]) == 0
    assert (tmp_path / "out" / "snapshots.dmds").exists()
    assert (tmp_path / "out" / "snapshots.csv").exists()
    assert cli.main(["fit", "--config", cfg, "--out", out]) == 0
    assert cli.main(["predict", "--config", cfg, "--out", out]) == 0
    rows = (tmp_path / "out" / "prediction_standard.csv").read_text().splitlines()
    assert len(rows) == 152 and rows[0].startswith("t,c0")


def test_cli_errors_verb(tmp_path, quiet_extrapolation):
    assert cli.main(["errors", "--config", write_cfg(tmp_path), "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "errors.csv").exists()


def test_cli_config_errors(tmp_path):
    assert cli.main(["fit"]) == 2
    assert cli.main(["fit", "--config", str(tmp_path / "missing.ini")]) == 2
    assert cli.main(["errors", "--config", write_cfg(tmp_path, "[experiment]\nsystem = x")]) == 2
    assert cli.main(["predict", "--config", write_cfg(tmp_path), "--out", str(tmp_path)]) == 2
    assert cli.main(["reproduce", "nonsense"]) == 2
    assert cli.main(["bounds", "--seed", "-1"]) == 2


def test_cli_numeric_failure(tmp_path):
    text = SMALL_1D.replace("dx = 0.1", "dx = 0.1\ndt = 0.2")
    assert cli.main(["errors", "--config", write_cfg(tmp_path, text), "--out", str(tmp_path / "o")]) == 3


def test_cli_bound_violation(tmp_path, monkeypatch):
    monkeypatch.setattr(E, "run_bounds_suite", lambda *a, **k: [make_report("fake", 1.0, 2.0)])
    assert cli.main(["bounds", "--out", str(tmp_path)]) == 4
    assert (tmp_path / "bounds.csv").exists()


def test_cli_bounds_small(tmp_path):
    args = ["bounds", "--seeds", "1", "--sizes", "2,3", "--N", "6", "--no-systems", "--out", str(tmp_path)]
    assert cli.main(args) == 0
