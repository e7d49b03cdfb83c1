import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lagdmd import bounds as B
from lagdmd.errors import InvalidCoefficient, RankCollapse
from lagdmd.snapshots import DataPair, SnapshotSet, build_data_pair
from lagdmd.solvers import LinearSystemConfig, solve_linear_system
from lagdmd.solvers.linear import zero_forcing
from lagdmd.timevarying import fit_piecewise


def gaussian_pair(rng, n, m):
    return DataPair(rng.standard_normal((n, m)), rng.standard_normal((n, m)))


# --- rank truncation -----------------------------------------------------------

def test_rank_truncation_identity():
    rep = B.rank_truncation_bound(DataPair(np.eye(3), np.eye(3)), 2)
    assert rep.computed_bound == pytest.approx(1.0)
    assert rep.measured == pytest.approx(1.0)
    assert rep.satisfied


@pytest.mark.parametrize("seed", range(10))
def test_rank_truncation_random(seed):
    rng = np.random.default_rng(seed)
    d = gaussian_pair(rng, 30, 10)
    for r in range(1, 11):
        assert B.rank_truncation_bound(d, r).satisfied


def test_rank_truncation_full_rank_is_exact(rng):
    d = gaussian_pair(rng, 12, 6)
    assert B.rank_truncation_bound(d, 6).measured == pytest.approx(0.0, abs=1e-12)


def test_rank_truncation_rejects_bad_rank(rng):
    with pytest.raises(ValueError):
        B.rank_truncation_bound(gaussian_pair(rng, 5, 3), 4)


def test_pointwise_rank_directions(rng):
    d = gaussian_pair(rng, 20, 8)
    U, s, _ = np.linalg.svd(d.X, full_matrices=False)
    assert B.pointwise_rank_bound(d, 3, U[:, 0]).computed_bound == pytest.approx(0.0, abs=1e-14)
    rep = B.pointwise_rank_bound(d, 3, U[:, 3])
    assert rep.computed_bound == pytest.approx(np.linalg.norm(d.Y, 2) / s[3])
    assert rep.satisfied


@given(st.integers(0, 10_000), st.integers(1, 7))
def test_pointwise_rank_property(seed, r):
    rng = np.random.default_rng(seed)
    d = gaussian_pair(rng, 15, 7)
    assert B.pointwise_rank_bound(d, r, rng.standard_normal(15)).satisfied


# --- pseudoinverse update ------------------------------------------------------

def test_pinv_append_canonical():
    Xm = np.array([[1.0], [0.0]])
    upd = B.pinv_append(np.linalg.pinv(Xm), Xm, np.array([0.0, 1.0]))
    assert upd.c == 1.0
    np.testing.assert_allclose(upd.pinv, np.eye(2))


@pytest.mark.parametrize("seed", range(5))
def test_pinv_append_matches_direct(seed):
    rng = np.random.default_rng(seed)
    Xm = rng.standard_normal((40, 10))
    u = rng.standard_normal(40)
    upd = B.pinv_append(np.linalg.pinv(Xm), Xm, u)
    direct = np.linalg.pinv(np.column_stack([Xm, u]))
    assert np.linalg.norm(upd.pinv - direct) <= 1e-10 * np.linalg.norm(direct)
    assert upd.c >= 1 / (u @ u) * (1 - 1e-12)


def test_pinv_append_orthogonal_equality(rng):
    Q, _ = np.linalg.qr(rng.standard_normal((20, 6)))
    Xm, u = Q[:, :5] * 3.0, 2.0 * Q[:, 5]
    assert B.pinv_append(np.linalg.pinv(Xm), Xm, u).c == pytest.approx(1 / (u @ u), rel=1e-12)


def test_pinv_append_rank_collapse(rng):
    Xm = rng.standard_normal((10, 4))
    with pytest.raises(RankCollapse):
        B.pinv_append(np.linalg.pinv(Xm), Xm, Xm @ rng.standard_normal(4))


def test_pinv_append_round_trip(rng):
    Xm = rng.standard_normal((12, 3))
    u = rng.standard_normal(12)
    upd = B.pinv_append(np.linalg.pinv(Xm), Xm, u)
    # dropping the appended row recovers a left inverse of Xm restricted to u's complement
    X = np.column_stack([Xm, u])
    np.testing.assert_allclose(upd.pinv @ X, np.eye(4), atol=1e-12)


# --- column deletion -----------------------------------------------------------

@pytest.mark.parametrize("seed", range(10))
def test_column_deletion_general(seed):
    rng = np.random.default_rng(seed)
    Xm, Ym = rng.standard_normal((30, 8)), rng.standard_normal((30, 8))
    rep = B.column_deletion_bound(Xm, Ym, rng.standard_normal(30), rng.standard_normal(30))
    assert rep.name == "column_deletion" and rep.satisfied


def test_column_deletion_orthogonal(rng):
    Q, _ = np.linalg.qr(rng.standard_normal((30, 9)))
    Xm = Q[:, :8] @ np.diag(rng.uniform(0.5, 2, 8))
    Ym = rng.standard_normal((30, 8))
    rep = B.column_deletion_bound(Xm, Ym, 1.5 * Q[:, 8], rng.standard_normal(30))
    assert rep.name == "column_deletion_orthogonal" and rep.satisfied


def test_column_deletion_orthogonal_zero_output(rng):
    Q, _ = np.linalg.qr(rng.standard_normal((10, 4)))
    Xm, Ym, u = Q[:, :3], rng.standard_normal((10, 3)), Q[:, 3]
    rep = B.column_deletion_bound(Xm, Ym, u, np.zeros(10))
    s = np.linalg.svd(Xm, compute_uv=False)
    expected = np.linalg.norm(Ym, 2) * np.sqrt(1 / (u @ u) + 1 / s[-1] ** 2)
    assert rep.computed_bound == pytest.approx(expected)
    assert rep.satisfied


# --- time shift ----------------------------------------------------------------

def linear(C, x0=(1.0, 0.0), t_final=0.2):
    n = len(x0)
    cfg = LinearSystemConfig(C=C, f=zero_forcing(n), x0=x0, t_final=t_final)
    return cfg, solve_linear_system(cfg)


def test_time_shift_zero_operator():
    cfg, s = linear(lambda t: np.zeros((2, 2)), t_final=0.01)
    d = build_data_pair(s)
    rep = B.time_shift_bound(cfg, d)
    assert rep.computed_bound == pytest.approx(np.linalg.norm(d.X))
    assert rep.satisfied


def test_time_shift_rotation_all_prefixes():
    cfg, s = linear(LinearSystemConfig().C, t_final=1.0)
    gf = B.sample_gamma_f(cfg.C, cfg.f, 0.0, cfg.dt, s.count - 1)
    rep = B.time_shift_sweep(s, gf)
    assert rep.satisfied
    assert np.all(np.diff(rep.computed_bound) >= 0)


def test_time_shift_constant_refinement():
    C = np.diag([-1.0, -2.0])
    cfg, s = linear(lambda t: C, x0=(1.0, 1.0))
    d = build_data_pair(s)
    ref = B.constant_coefficient_bound(C, d, cfg.dt)
    assert ref.satisfied
    assert ref.computed_bound <= B.time_shift_bound(cfg, d).computed_bound


def test_time_shift_rejects_nan():
    with pytest.raises(InvalidCoefficient):
        B.sample_gamma_f(lambda t: np.full((2, 2), np.nan), zero_forcing(2), 0.0, 0.1, 3)
    with pytest.raises(InvalidCoefficient):
        B.constant_coefficient_bound(np.full((2, 2), np.nan), DataPair(np.eye(2), np.eye(2)), 0.1)


def test_time_shift_forcing_without_growth():
    gf = B.GammaF.from_intervals([0.0, 0.0], [1.0, 1.0])
    value, note = B.time_shift_bound_value(gf, 0.1, 1.0, 2)
    assert value == np.inf and note


def test_gamma_interval_maxima_validated():
    with pytest.raises(ValueError):
        B.GammaF.from_intervals([-1.0], [0.0])


# --- pointwise prediction error --------------------------------------------------

def scalar_trajectory(rate, dt=0.1, count=21):
    t = dt * np.arange(count)
    return SnapshotSet.from_states(np.exp(rate * t)[None, :], dt)


def test_pointwise_error_exact_linear_data():
    s = scalar_trajectory(-0.5)
    rep = B.pointwise_error_bound(fit_piecewise(s, 5, None, rank=1), s, B.LipschitzData(0.5))
    assert np.max(rep.measured) <= 1e-24
    assert rep.satisfied


def test_pointwise_error_dominates_on_nonlinear_data():
    t = 0.1 * np.arange(41)
    s = SnapshotSet.from_states(np.vstack([np.cos(t**2), np.sin(t**2)]), 0.1)
    model = fit_piecewise(s, 4, 1e-10)
    rep = B.pointwise_error_bound(model, s, B.LipschitzData(8.0))
    assert rep.satisfied
    assert np.all(np.diff(rep.computed_bound) >= 0)


def test_pointwise_error_shape_mismatch():
    s = scalar_trajectory(-0.5)
    model = fit_piecewise(s, 5, None, rank=1)
    with pytest.raises(IndexError):
        B.pointwise_error_bound(model, scalar_trajectory(-0.5, count=11), B.LipschitzData(1.0))


def test_lipschitz_must_be_nonnegative():
    with pytest.raises(ValueError):
        B.LipschitzData(-1.0)


def test_estimate_lipschitz_rotation():
    C = LinearSystemConfig().C
    L = B.estimate_lipschitz(C, 0.0, 1.0, points=50)
    assert L.L == pytest.approx(max(np.linalg.norm(C(t), 2) for t in np.linspace(0, 1, 50)))
    assert L.source == "estimated"


# --- reporting -------------------------------------------------------------------

def test_make_report_tolerance():
    assert B.make_report("x", 1.0, 1.0 + 1e-12).satisfied
    assert not B.make_report("x", 1.0, 1.001).satisfied
    assert B.make_report("x", np.inf, 1e300).satisfied


def test_verification_csv(tmp_path, rng):
    reps = [B.rank_truncation_bound(gaussian_pair(rng, 6, 3), 2, instance="a"),
            B.make_report("sweep", np.array([1.0, 2.0]), np.array([0.5, 2.5]), m=np.array([1, 2]))]
    B.write_verification_csv(reps, tmp_path / "b.csv")
    rows = list(csv.reader(open(tmp_path / "b.csv")))
    assert rows[0] == ["instance", "name", "m", "computed_bound", "measured", "slack", "satisfied"]
    assert len(rows) == 4
    assert rows[-1][-1] in ("0", "False")


def test_spectral_norm_sparse_and_dense(rng):
    import scipy.sparse as sp
    A = rng.standard_normal((30, 20))
    assert B.spectral_norm(sp.csr_matrix(A)) == pytest.approx(np.linalg.norm(A, 2), rel=1e-10)
    assert B.spectral_norm(np.zeros((0, 3))) == 0.0
