import json

import numpy as np
import pytest

import spillkit as sk
from spillkit.connectedness import QvarEntry, check_report_identities
from spillkit.errors import OrderingRequired
from spillkit.synth import simulate_var_values

from conftest import rng


A3 = np.array([[0.5, 0.2, 0.0], [0.1, 0.4, 0.1], [0.15, 0.0, 0.3]])
SIG3 = np.array([[1.0, 0.3, 0.1], [0.3, 1.0, 0.2], [0.1, 0.2, 1.0]])


def _sim3(T=500, seed=21):
    return simulate_var_values(np.zeros(3), [A3], SIG3, T, rng(seed))


def _random_shares(gen, k):
    raw = gen.uniform(0.0, 1.0, size=(k, k)) + np.diag(gen.uniform(0.5, 2.0, k))
    shares = 100.0 * raw / raw.sum(axis=1, keepdims=True)
    return sk.GfevdTable(tuple(f"e{i}" for i in range(k)), 10, shares)


# ----------------------------------------------------------------- QVAR


def test_qvar_median_close_to_var_truth():
    vals = _sim3()
    fit = sk.fit_qvar(vals, 1, 0.5)
    entry = fit.single()
    Z = np.column_stack([np.ones(len(vals) - 1), vals[:-1]])
    zz_inv = np.linalg.inv(Z.T @ Z)
    varfit = sk.fit_var(vals, 1)
    for eq in range(3):
        se = np.sqrt(np.diag(zz_inv) * varfit.sigma[eq, eq])
        est = np.concatenate([[entry.intercept[eq]], entry.lag_matrices[0][eq]])
        truth = np.concatenate([[0.0], A3[eq]])
        assert np.all(np.abs(est - truth) <= 3.0 * se)


def test_qvar_scalar_reduction_intercept_near_zero():
    y = rng(3).standard_normal((500, 1))
    fit = sk.fit_qvar(y, 1, 0.5)
    assert abs(fit.single().intercept[0]) < 0.2


def test_qvar_grid_ordering_enforced():
    vals = _sim3(T=60)
    with pytest.raises(ValueError):
        sk.fit_qvar_grid(vals, 1, (0.5, 0.25))
    with pytest.raises(ValueError):
        sk.validate_theta_grid((0.0, 0.5))
    grid = sk.fit_qvar_grid(vals, 1, (0.25, 0.5, 0.75))
    assert grid.theta_grid == (0.25, 0.5, 0.75)


def test_qvar_structural_needs_ordering():
    vals = _sim3(T=80)
    with pytest.raises(OrderingRequired):
        sk.fit_qvar(vals, 1, 0.5, structural=True)
    fit = sk.fit_qvar(vals, 1, 0.5, structural=True,
                      ordering=("y1", "y2", "y3"))
    a0 = fit.single().contemporaneous
    assert np.all(np.triu(a0) == 0)  # strictly lower triangular


# ---------------------------------------------------------------- GFEVD


def test_gfevd_diagonal_var_identity():
    shares = sk.gfevd_from_coefficients([np.diag([0.5, 0.3, 0.2])],
                                        np.diag([1.0, 2.0, 0.5]), 10)
    assert np.max(np.abs(shares - 100.0 * np.eye(3))) < 1e-8


def test_gfevd_rows_sum_to_100():
    fit = sk.fit_var(_sim3(), 1)
    table = sk.gfevd(fit, 10)
    assert np.allclose(table.shares.sum(axis=1), 100.0, atol=1e-8)
    assert table.horizon == 10


def test_gfevd_order_invariance():
    vals = _sim3()
    fit = sk.fit_var(vals, 1)
    table = sk.gfevd(fit, 10)
    perm = [2, 0, 1]
    fit_p = sk.fit_var(vals[:, perm], 1)
    table_p = sk.gfevd(fit_p, 10)
    P = np.eye(3)[perm]
    assert np.max(np.abs(P @ table.shares @ P.T - table_p.shares)) < 1e-8


# --------------------------------------------------------------- report


def test_report_identities_on_random_tables():
    gen = rng(99)
    for _ in range(100):
        k = int(gen.integers(2, 8))
        rep = sk.connectedness_report(_random_shares(gen, k))
        check_report_identities(rep)


def test_report_identity_shares_no_connectedness():
    table = sk.GfevdTable(("a", "b", "c"), 10, 100.0 * np.eye(3))
    rep = sk.connectedness_report(table)
    assert rep.tci == 0.0
    assert np.all(rep.net == 0.0)
    assert np.all(rep.npdc_degree == 0)


def test_report_matches_published_style_fixture():
    import pandas as pd
    from pathlib import Path
    fix = Path(__file__).parent / "fixtures" / "table5_iep_q10.csv"
    frame = pd.read_csv(fix, index_col=0)
    entities = [i for i in frame.index if i not in ("TO", "TOTAL", "NET", "NPDC")]
    S = frame.loc[entities, entities].to_numpy(dtype=float)
    rep = sk.connectedness_report(
        sk.GfevdTable(tuple(entities), 10,
                      100.0 * S / S.sum(axis=1, keepdims=True)))
    # published China row: own 20.09, FROM 79.91, TO 152.24, NET 72.33
    i = entities.index("China")
    assert rep.from_others[i] == pytest.approx(79.91, abs=0.05)
    assert rep.to_others[i] == pytest.approx(152.24, abs=0.05)
    assert rep.net[i] == pytest.approx(72.33, abs=0.07)
    assert rep.total_including_own[i] == pytest.approx(172.33, abs=0.07)
    assert rep.npdc_degree[i] == 6
    assert rep.tci == pytest.approx(607.94 / 7, abs=0.02)


# ---------------------------------------------------------------- sweep


def test_sweep_single_point_equals_report():
    vals = _sim3(T=200, seed=5)
    sweep = sk.quantile_sweep(vals, 1, 10, thetas=(0.5,))
    assert len(sweep.rows) == 1
    row = sweep.rows[0]
    fit = sk.fit_qvar(vals, 1, 0.5)
    rep = sk.connectedness_report(sk.gfevd(fit, 10))
    assert np.allclose(row.from_others, rep.from_others, atol=1e-10)
    assert np.allclose(row.to_others, rep.to_others, atol=1e-10)


def test_sweep_symmetric_noise_is_flat_near_median():
    vals = _sim3(T=500, seed=8)
    sweep = sk.quantile_sweep(vals, 1, 10, thetas=(0.45, 0.55))
    tcis = [row.from_others.sum() / 3 for row in sweep.rows]
    assert abs(tcis[0] - tcis[1]) < 5.0


def test_sweep_records_row_failures_without_aborting():
    tiny = rng(9).standard_normal((5, 3))  # 4 usable rows, 4 params per eq
    sweep = sk.quantile_sweep(tiny, 1, 10, thetas=(0.25, 0.5))
    assert len(sweep.rows) == 2
    assert all(not row.ok and row.error for row in sweep.rows)


def test_default_theta_grid():
    grid = sk.default_theta_grid()
    assert grid[0] == 0.05 and grid[-1] == 0.95 and len(grid) == 19


# --------------------------------------------- structural quantile IRF


def test_structural_irf_zero_a0_reduces_to_var_irf():
    vals = _sim3(T=300, seed=31)
    varfit = sk.fit_var(vals, 1)
    entry = QvarEntry(0.5, varfit.intercept, varfit.lag_matrices,
                      np.zeros((3, 3)), varfit.sigma,
                      varfit.residuals, ())
    resp = sk.structural_quantile_irf(entry, 8)
    ref = sk.irf(varfit, 8, "recursive-structural")
    assert np.max(np.abs(resp - ref)) < 1e-12


def test_structural_irf_triangular_inverse():
    a0 = np.array([[0.0, 0.0], [0.5, 0.0]])
    m = np.linalg.inv(np.eye(2) - a0)
    assert np.allclose(m, [[1.0, 0.0], [0.5, 1.0]])
    assert np.allclose(m @ (np.eye(2) - a0), np.eye(2))


def test_structural_irf_hand_worked():
    a0 = np.array([[0.0, 0.0], [0.5, 0.0]])
    entry = QvarEntry(0.5, np.zeros(2), (np.diag([0.5, 0.4]),), a0,
                      np.eye(2), np.zeros((1, 2)), ())
    resp = sk.structural_quantile_irf(entry, 2)
    assert resp[0][1, 0] == pytest.approx(0.5)
    # h=1: B = M A1 with M = I + a0; response col 0 = B @ M[:,0]
    M = np.eye(2) + a0
    B = M @ np.diag([0.5, 0.4])
    assert np.allclose(resp[1], B @ M)


def test_structural_irf_requires_structural_fit():
    vals = _sim3(T=100, seed=32)
    fit = sk.fit_qvar(vals, 1, 0.5)
    with pytest.raises(ValueError):
        sk.structural_quantile_irf(fit, 5)


# -------------------------------------------------------------- export


def test_npdc_exports():
    gen = rng(55)
    rep = sk.connectedness_report(_random_shares(gen, 4))
    dot = sk.npdc_to_dot(rep)
    assert dot.startswith("digraph npdc {")
    # every positive npdc cell becomes one edge
    n_edges = int((rep.npdc > 0).sum())
    assert dot.count("->") == n_edges
    blob = json.loads(sk.npdc_node_link_json(rep))
    assert len(blob["nodes"]) == 4
    assert len(blob["links"]) == n_edges
    for link in blob["links"]:
        i = rep.names.index(link["source"])
        j = rep.names.index(link["target"])
        assert rep.npdc[i, j] > 0


def test_gfevd_entries_nonnegative():
    fit = sk.fit_var(_sim3(), 1)
    table = sk.gfevd(fit, 10)
    assert np.min(table.shares) >= 0.0


def test_gfevd_from_multi_theta_fit_selects_entry():
    vals = _sim3(T=200, seed=41)
    grid = sk.fit_qvar_grid(vals, 1, (0.25, 0.5))
    t_half = sk.gfevd(grid, 10, theta=0.5)
    single = sk.fit_qvar(vals, 1, 0.5)
    assert np.allclose(t_half.shares, sk.gfevd(single, 10).shares)
    with pytest.raises(KeyError):
        sk.gfevd(grid, 10, theta=0.9)
    with pytest.raises(ValueError):
        sk.gfevd(grid, 10)  # ambiguous without theta


def test_qvar_structural_two_lags_shapes():
    vals = _sim3(T=120, seed=61)
    fit = sk.fit_qvar(vals, 2, 0.5, structural=True,
                      ordering=("y1", "y2", "y3"))
    entry = fit.single()
    assert len(entry.lag_matrices) == 2
    assert entry.lag_matrices[0].shape == (3, 3)
    resp = sk.structural_quantile_irf(fit, 4)
    assert resp.shape == (5, 3, 3)


def test_npdc_dot_threshold_filters_edges():
    gen = rng(56)
    rep = sk.connectedness_report(_random_shares(gen, 4))
    full = sk.npdc_to_dot(rep, threshold=0.0)
    cut = sk.npdc_to_dot(rep, threshold=float(np.abs(rep.npdc).max()) + 1.0)
    assert full.count("->") >= cut.count("->")
    assert cut.count("->") == 0


def test_rolling_connectedness_windows():
    vals = _sim3(T=80, seed=71)
    windows = sk.rolling_connectedness(vals, 1, 10, 0.5, window=40)
    assert len(windows) == 80 - 40 + 1
    assert all(w.ok for w in windows)
    # full-sample window reproduces the static report
    full = sk.rolling_connectedness(vals, 1, 10, 0.5, window=80)
    assert len(full) == 1
    static = sk.connectedness_report(sk.gfevd(sk.fit_qvar(vals, 1, 0.5), 10))
    assert np.allclose(full[0].report.npdc, static.npdc, atol=1e-12)
    with pytest.raises(ValueError):
        sk.rolling_connectedness(vals, 1, 10, 0.5, window=81)


def test_rolling_connectedness_records_failures():
    vals = _sim3(T=30, seed=72)
    # window of 4 rows cannot identify 4 params per equation
    windows = sk.rolling_connectedness(vals, 1, 10, 0.5, window=4)
    assert all(not w.ok and w.error for w in windows)


def test_gfevd_of_estimated_fit_matches_monte_carlo():
    from conftest import mc_gfevd
    vals = simulate_var_values(np.zeros(2),
                               [np.array([[0.5, 0.2], [0.1, 0.4]])],
                               np.array([[1.0, 0.3], [0.3, 1.0]]),
                               800, rng(92))
    fit = sk.fit_var(vals, 1)
    table = sk.gfevd(fit, 10)
    mc = mc_gfevd(list(fit.lag_matrices), fit.sigma, 10, 100_000, seed=93)
    assert np.max(np.abs(table.shares - mc)) < 1.0  # within one point per cell
