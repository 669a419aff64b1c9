import numpy as np
import pytest
from scipy import stats

import spillkit as sk
from spillkit.errors import DegenerateDenominator, ExplosiveWarning, TooFewObservations
from spillkit.synth import simulate_var_values
from spillkit.varmodel import VarFit, companion_matrix, ma_coefficients

from conftest import panel_from_arrays, rng


A1 = np.array([[0.5, 0.2], [0.1, 0.4]])
SIG = np.array([[1.0, 0.3], [0.3, 1.0]])


def _sim(T=500, seed=7, A=A1, sigma=SIG, intercept=None):
    k = A.shape[0]
    if intercept is None:
        intercept = np.zeros(k)
    return simulate_var_values(intercept, [A], sigma, T, rng(seed))


def test_fit_var_recovers_truth_within_3se():
    vals = _sim(intercept=np.array([1.0, -0.5]))
    fit = sk.fit_var(vals, 1)
    Z = np.column_stack([np.ones(len(vals) - 1), vals[:-1]])
    zz_inv = np.linalg.inv(Z.T @ Z)
    for eq in range(2):
        se = np.sqrt(np.diag(zz_inv) * fit.sigma[eq, eq])
        est = np.concatenate([[fit.intercept[eq]], fit.lag_matrices[0][eq]])
        truth = np.concatenate([[[1.0, -0.5][eq]], A1[eq]])
        assert np.all(np.abs(est - truth) <= 3.0 * se)


def test_fit_var_scalar_reduces_to_ols():
    y = _sim()[:, 0]
    fit = sk.fit_var(y[:, None], 1)
    ols = sk.ols_fit(y[:-1], y[1:])
    assert fit.intercept[0] == pytest.approx(ols.coefficients[0], abs=1e-12)
    assert fit.lag_matrices[0][0, 0] == pytest.approx(ols.coefficients[1], abs=1e-12)


def test_fit_var_five_variable_offshoring_system():
    roles = ["fdi", "trd", "inv", "ifr", "iep"]
    gen = rng(23)
    arrays = {("A", r): gen.standard_normal(40) + 10 for r in roles}
    panel = panel_from_arrays(["A"], roles, arrays)
    fit = sk.fit_var(panel.slice_entity("A"), 1)
    assert fit.names == tuple(roles)
    assert fit.lag_matrices[0].shape == (5, 5)
    assert fit.sigma.shape == (5, 5)
    # sigma symmetric PSD
    assert np.max(np.abs(fit.sigma - fit.sigma.T)) < 1e-10
    assert np.min(np.linalg.eigvalsh(fit.sigma)) > -1e-10


def test_fit_var_residual_orthogonality():
    vals = _sim(T=200, seed=12)
    fit = sk.fit_var(vals, 2)
    Z = np.column_stack([np.ones(len(vals) - 2), vals[1:-1], vals[:-2]])
    scale = np.abs(Z).max() * np.abs(fit.residuals).max() * len(Z)
    assert np.max(np.abs(Z.T @ fit.residuals)) < 1e-8 * scale


def test_fit_var_too_few_observations():
    with pytest.raises(TooFewObservations):
        sk.fit_var(rng(1).standard_normal((6, 2)), 2)


def test_companion_structure():
    A2 = np.array([[0.1, 0.0], [0.0, 0.1]])
    comp = companion_matrix([A1, A2])
    assert comp.shape == (4, 4)
    assert np.array_equal(comp[:2, :2], A1)
    assert np.array_equal(comp[:2, 2:], A2)
    assert np.array_equal(comp[2:, :2], np.eye(2))


# ------------------------------------------------------- lag selection


def test_select_lag_white_noise_prefers_one():
    hits = 0
    for s in range(100):
        sel = sk.select_lag(rng(50_000 + s).standard_normal((300, 2)), 4)
        hits += sel.chosen == 1
    assert hits >= 80


def test_select_lag_var2_prefers_two():
    A = [np.array([[0.35, 0.1], [0.05, 0.3]]),
         np.array([[0.3, -0.15], [0.1, 0.25]])]
    hits = 0
    for s in range(100):
        vals = simulate_var_values(np.zeros(2), A, np.eye(2), 300,
                                   rng(60_000 + s))
        hits += sk.select_lag(vals, 4).chosen == 2
    assert hits >= 80


def test_select_lag_unanimous_rule():
    A = np.array([[0.8, 0.0], [0.0, 0.8]])
    vals = simulate_var_values(np.zeros(2), [A], np.eye(2), 400, rng(3))
    sel = sk.select_lag(vals, 3)
    argmins = {c: sel.argmin(c) for c in ("AIC", "HQ", "SC", "FPE")}
    if len(set(argmins.values())) == 1:
        assert sel.rule == "unanimous"
        assert sel.chosen == argmins["SC"]
    else:
        assert sel.rule == "SC-tiebreak"


def test_select_lag_sc_monotone_on_white_noise():
    votes = 0
    for s in range(60):
        sel = sk.select_lag(rng(70_000 + s).standard_normal((300, 2)), 3)
        sc = [sel.criteria[p]["SC"] for p in (1, 2, 3)]
        votes += sc[0] < sc[1] < sc[2]
    assert votes >= 45  # strongly monotone in the typical draw


# ------------------------------------------------------------ granger


def test_granger_detects_lagged_dependence():
    gen = rng(42)
    T = 200
    x = gen.standard_normal(T)
    y = np.zeros(T)
    for t in range(1, T):
        y[t] = 0.6 * x[t - 1] + gen.standard_normal()
    data = np.column_stack([y, x])
    rep = sk.granger_test(data, cause="y2", effect="y1", p=1)
    assert rep.p_bracket[1] <= 0.01


def test_granger_matches_rss_recomputation():
    vals = _sim(T=120, seed=9)
    p = 2
    rep = sk.granger_test(vals, "y2", "y1", p)
    T, k = vals.shape
    Z = np.column_stack([np.ones(T - p), vals[1:-1], vals[:-2]])
    y = vals[p:, 0]
    rss_u = np.sum((y - Z @ np.linalg.lstsq(Z, y, rcond=None)[0]) ** 2)
    keep = [0, 1, 3]  # const + y1 lags only
    Zr = Z[:, keep]
    rss_r = np.sum((y - Zr @ np.linalg.lstsq(Zr, y, rcond=None)[0]) ** 2)
    dof = (T - p) - (k * p + 1)
    f = ((rss_r - rss_u) / p) / (rss_u / dof)
    assert rep.statistic == pytest.approx(f, abs=1e-9)
    assert rep.p_bracket[1] == pytest.approx(stats.f.sf(f, p, dof), abs=1e-12)


# ---------------------------------------------------------- residuals


def test_jarque_bera_normal_sample():
    rep = sk.jarque_bera(rng(4).standard_normal(100_000))
    assert rep.verdict == "fail-to-reject"


def test_jarque_bera_exponential_sample():
    rep = sk.jarque_bera(rng(5).exponential(size=1000), significance=0.01)
    assert rep.verdict == "reject"


def test_jarque_bera_symmetric_two_point():
    x = np.array([-1.0, 1.0] * 50)
    rep = sk.jarque_bera(x)
    # skew term vanishes; excess kurtosis is exactly -2
    assert rep.statistic == pytest.approx(len(x) / 6.0 * ((-2.0) ** 2 / 4.0))


def test_jarque_bera_matrix_combined():
    resid = rng(6).standard_normal((5000, 3))
    reports, combined = sk.jarque_bera(resid)
    assert len(reports) == 3
    assert combined.statistic == pytest.approx(sum(r.statistic for r in reports))


# ---------------------------------------------------------------- RMS


def _zero_fit(names=("y1",), k=1):
    return VarFit(tuple(names), 1, "levels", "const", np.zeros(k),
                  (np.zeros((k, k)),), None, np.zeros((4, k)), np.eye(k), 4)


def test_rms_perfect_fit_zero():
    # data whose one-step predictions are exact: y_t = 1 + 0.5 y_{t-1}
    y = np.zeros((30, 1))
    y[0] = 5.0
    for t in range(1, 30):
        y[t] = 1.0 + 0.5 * y[t - 1]
    fit = VarFit(("y1",), 1, "levels", "const", np.array([1.0]),
                 (np.array([[0.5]]),), None, np.zeros((29, 1)), np.eye(1), 29)
    assert sk.model_rms(fit, y)["y1"].rms == pytest.approx(0.0, abs=1e-12)


def test_rms_constant_residual_is_abs_c():
    fit = _zero_fit()
    data = np.full((10, 1), -3.0)  # predictions are all zero
    rep = sk.model_rms(fit, data)["y1"]
    assert rep.rms == pytest.approx(3.0, abs=1e-12)
    assert rep.n_points == 10 and rep.order == 1


def test_rms_matches_independent_recomputation():
    vals = _sim(T=80, seed=15)
    fit = sk.fit_var(vals, 2)
    rms = sk.model_rms(fit, vals)
    err = vals[2:] - fit.fitted(vals)
    for j, name in enumerate(fit.names):
        ref = np.sqrt(np.sum(err[:, j] ** 2) / (len(vals) - 2))
        assert rms[name].rms == pytest.approx(ref, abs=1e-12)


def test_rms_degenerate_denominator():
    fit = _zero_fit()
    with pytest.raises(DegenerateDenominator):
        sk.model_rms(fit, np.zeros((1, 1)))


# ---------------------------------------------------------------- IRF


def test_irf_impact_generalized_diagonal_sigma():
    sigma = np.diag([4.0, 9.0])
    fit = VarFit(("a", "b"), 1, "levels", "const", np.zeros(2),
                 (np.zeros((2, 2)),), None, np.zeros((5, 2)), sigma, 5)
    resp = sk.irf(fit, 0, "generalized")
    assert np.allclose(resp[0], np.diag([2.0, 3.0]))


def test_irf_ar1_geometric():
    fit = VarFit(("y",), 1, "levels", "const", np.zeros(1),
                 (np.array([[0.5]]),), None, np.zeros((5, 1)), np.eye(1), 5)
    resp = sk.irf(fit, 4, "recursive-structural")[:, 0, 0]
    assert np.allclose(resp, [1.0, 0.5, 0.25, 0.125, 0.0625])


def test_irf_matches_direct_shock_simulation():
    vals = _sim(T=300, seed=16)
    fit = sk.fit_var(vals, 1)
    H = 12
    resp = sk.irf(fit, H, "recursive-structural")
    A = fit.lag_matrices[0]
    for j in range(2):
        y = np.zeros((H + 1, 2))
        y[0, j] = 1.0
        for h in range(1, H + 1):
            y[h] = A @ y[h - 1]
        assert np.max(np.abs(resp[:, :, j] - y)) < 1e-10


def test_irf_zero_matrices_zero_beyond_impact():
    fit = _zero_fit(("a", "b"), 2)
    resp = sk.irf(fit, 6, "generalized")
    assert np.max(np.abs(resp[1:])) == 0.0


def test_irf_stable_decay_and_explosive_warning():
    vals = _sim(T=300, seed=17)
    fit = sk.fit_var(vals, 1)
    psis = ma_coefficients(fit.lag_matrices, 30)
    norms = np.linalg.norm(psis, axis=(1, 2))
    assert norms[-1] < norms[1] and norms[-1] < 1e-2
    bad = VarFit(("y",), 1, "levels", "const", np.zeros(1),
                 (np.array([[1.05]]),), None, np.zeros((5, 1)), np.eye(1), 5)
    with pytest.warns(ExplosiveWarning):
        sk.irf(bad, 5)


def test_fit_var_with_trend_deterministic():
    gen = rng(91)
    T = 200
    trend = 0.05 * np.arange(T)
    vals = _sim(T=T, seed=91) + trend[:, None]
    fit = sk.fit_var(vals, 1, deterministic="const+trend")
    assert fit.trend_coef is not None
    Z = np.column_stack([np.ones(T - 1), np.arange(1, T), vals[:-1]])
    scale = np.abs(Z).max() * max(np.abs(fit.residuals).max(), 1.0) * len(Z)
    assert np.max(np.abs(Z.T @ fit.residuals)) < 1e-8 * scale
    rms = sk.model_rms(fit, vals)
    assert rms["pooled"].rms > 0


def test_irf_rejects_unknown_kind():
    fit = _zero_fit()
    with pytest.raises(ValueError):
        sk.irf(fit, 3, "cholesky")
    with pytest.raises(ValueError):
        sk.irf(fit, -1)
