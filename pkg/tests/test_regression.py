import numpy as np
import pytest

import spillkit as sk
from spillkit.errors import RankDeficient, TooFewRows, WindowExceedsSample, WindowTooSmall
from spillkit.regression import RQ_MODELS
from spillkit.synth import ProcessSpec, simulate

from conftest import panel_from_arrays, rng


# ----------------------------------------------------------------- OLS


def test_ols_exact_fit():
    x = np.arange(10.0)
    fit = sk.ols_fit(x, 2.0 * x + 1.0)
    assert fit.coefficients == pytest.approx([1.0, 2.0], abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)


def test_ols_orthogonal_slope_zero():
    x = np.array([-1.0, 1.0, -1.0, 1.0, -1.0, 1.0])
    y = np.array([1.0, 1.0, -2.0, -2.0, 1.0, 1.0])  # centred, orthogonal to x
    fit = sk.ols_fit(x, y)
    assert abs(fit.coefficients[1]) < 1e-12


def test_ols_matches_normal_equations_oracle():
    gen = rng(5)
    X = gen.standard_normal((20, 3))
    y = gen.standard_normal(20)
    fit = sk.ols_fit(X, y)
    Xa = np.column_stack([np.ones(20), X])
    beta = np.linalg.solve(Xa.T @ Xa, Xa.T @ y)  # independent dense solve
    assert np.max(np.abs(fit.coefficients - beta)) < 1e-9


def test_ols_invariants_random_instances():
    gen = rng(7)
    for _ in range(25):
        X = gen.standard_normal((30, 3))
        y = gen.standard_normal(30) + X @ gen.standard_normal(3)
        fit = sk.ols_fit(X, y)
        assert abs(fit.residuals.sum()) < 1e-9 * max(1, np.abs(y).sum())
        Xa = np.column_stack([np.ones(30), X])
        scale = np.abs(Xa).max() * np.abs(fit.residuals).max()
        assert np.max(np.abs(Xa.T @ fit.residuals)) < 1e-9 * max(1.0, scale)
        rss = fit.residuals @ fit.residuals
        tss = np.sum((y - y.mean()) ** 2)
        assert fit.r_squared == pytest.approx(1 - rss / tss, abs=1e-12)
        # scale equivariance
        fit2 = sk.ols_fit(X, 3.5 * y)
        assert np.allclose(fit2.coefficients, 3.5 * fit.coefficients, rtol=1e-12)


def test_ols_errors():
    gen = rng(9)
    with pytest.raises(TooFewRows):
        sk.ols_fit(gen.standard_normal((3, 3)), gen.standard_normal(3))
    X = gen.standard_normal((12, 2))
    X = np.column_stack([X, X[:, 0]])  # duplicated column
    with pytest.raises(RankDeficient):
        sk.ols_fit(X, gen.standard_normal(12))


# ------------------------------------------------------------ rolling


def _rq_panel(T=21, seed=31):
    gen = rng(seed)
    arrays = {}
    for ent in ("AA", "BB"):
        trd = gen.standard_normal(T) + 5
        ifr = gen.standard_normal(T) + 3
        fdi = 1.0 + 0.8 * trd - 0.5 * ifr + 0.3 * gen.standard_normal(T)
        inv = 0.5 + 0.2 * trd + 0.1 * ifr + 0.5 * gen.standard_normal(T)
        iep = 2.0 + 0.6 * fdi + 0.4 * gen.standard_normal(T)
        arrays.update({(ent, "fdi"): fdi, (ent, "trd"): trd, (ent, "inv"): inv,
                       (ent, "ifr"): ifr, (ent, "iep"): iep})
    return panel_from_arrays(["AA", "BB"], ["fdi", "trd", "inv", "ifr", "iep"],
                             arrays)


def test_rolling_window_legality_mirrors_model_sizes():
    panel = _rq_panel()
    # RQ1/RQ2 have 3 model variables -> windows 4..8 legal, 3 is not
    for w in range(4, 9):
        sk.rolling_ols(panel, RQ_MODELS["RQ1"], w, "AA")
    with pytest.raises(WindowTooSmall) as err:
        sk.rolling_ols(panel, RQ_MODELS["RQ1"], 3, "AA")
    assert "larger than the number of model variables" in str(err.value)
    # RQ3 has 2 model variables -> windows 3..7 legal
    for w in range(3, 8):
        sk.rolling_ols(panel, RQ_MODELS["RQ3"], w, "AA")
    with pytest.raises(WindowTooSmall):
        sk.rolling_ols(panel, RQ_MODELS["RQ3"], 2, "AA")
    with pytest.raises(WindowExceedsSample):
        sk.rolling_ols(panel, RQ_MODELS["RQ3"], 22, "AA")


def test_rolling_window_count_and_mean():
    panel = _rq_panel()
    res = sk.rolling_ols(panel, RQ_MODELS["RQ1"], 6, "AA")
    assert res.n_windows == 21 - 6 + 1
    assert res.mean_r_squared == pytest.approx(
        np.mean([f.r_squared for f in res.fits]), abs=1e-12)


def test_rolling_full_window_equals_plain_ols():
    panel = _rq_panel()
    res = sk.rolling_ols(panel, RQ_MODELS["RQ1"], 21, "AA")
    assert len(res.fits) == 1
    block = panel.slice_entity("AA", ["fdi", "trd", "ifr"])
    ols = sk.ols_fit(block.values[:, 1:], block.values[:, 0])
    assert np.max(np.abs(res.fits[0].coefficients - ols.coefficients)) < 1e-10
    assert res.mean_r_squared == pytest.approx(ols.r_squared, abs=1e-12)


def test_rolling_detects_slope_flip():
    spec = ProcessSpec(kind="time-varying-slope-panel", T=40, seed=8,
                       parameters={"slopes": [1.5, -1.5], "noise_sd": 0.2})
    panel, manifest = simulate(spec)
    # panel entities are the columns y and x, one variable each
    arrays = {("A", "y"): panel.series("y", "y").values,
              ("A", "x"): panel.series("x", "y").values}
    p = panel_from_arrays(["A"], ["y", "x"], arrays)
    model = sk.ModelSpec("flip", "y", ("x",))
    res = sk.rolling_ols(p, model, 10, "A")
    early = res.fits[0].coefficients[1]
    late = res.fits[-1].coefficients[1]
    assert np.sign(early) != np.sign(late)
    assert np.sign(early) == np.sign(manifest["slopes"][0])


def test_rolling_flag_from_median_pvalue():
    gen = rng(44)
    T = 30
    x = gen.standard_normal(T)
    arrays = {("A", "y"): 2.0 * x + 0.05 * gen.standard_normal(T), ("A", "x"): x}
    panel = panel_from_arrays(["A"], ["y", "x"], arrays)
    res = sk.rolling_ols(panel, sk.ModelSpec("m", "y", ("x",)), 8, "A")
    assert res.flag == "p01"


def test_rolling_skips_degenerate_windows():
    T = 12
    x = np.array([1.0] * 6 + [2.0, 1.0, 3.0, 2.0, 4.0, 1.0])
    y = rng(2).standard_normal(T)
    panel = panel_from_arrays(["A"], ["y", "x"], {("A", "y"): y, ("A", "x"): x})
    res = sk.rolling_ols(panel, sk.ModelSpec("m", "y", ("x",)), 4, "A")
    assert len(res.skipped_windows) == 3  # windows fully inside the constant run
    assert res.n_windows == T - 4 + 1


# ----------------------------------------------------------- quantile


def test_quantile_median_identity_exact():
    y = np.array([7.0, 1.0, 5.0, 3.0, 9.0])
    fit = sk.quantile_fit(np.empty((5, 0)), y, 0.5)
    assert fit.coefficients[0] == np.median(y)


def test_quantile_q90_matches_order_statistic_scan():
    y = np.arange(1.0, 11.0)
    fit = sk.quantile_fit(np.empty((10, 0)), y, 0.9)
    losses = [sk.pinball_loss(y - b, 0.9) for b in y]  # scan all order stats
    assert fit.pinball_loss == pytest.approx(min(losses), abs=1e-12)
    assert fit.coefficients[0] in y[np.isclose(losses, min(losses))]


def test_quantile_local_perturbation_oracle():
    gen = rng(12)
    X = gen.standard_normal((12, 1))
    y = gen.standard_normal(12)
    fit = sk.quantile_fit(X, y, 0.3)
    Xa = np.column_stack([np.ones(12), X])
    for j in range(2):
        for eps in (1e-4, -1e-4):
            beta = fit.coefficients.copy()
            beta[j] += eps
            loss = sk.pinball_loss(y - Xa @ beta, 0.3)
            assert loss >= fit.pinball_loss - 1e-12


def test_quantile_below_fraction_invariant():
    gen = rng(77)
    for _ in range(100):
        n = int(gen.integers(15, 40))
        k = int(gen.integers(0, 3))
        X = gen.standard_normal((n, k))
        y = gen.standard_normal(n)
        theta = float(gen.uniform(0.1, 0.9))
        fit = sk.quantile_fit(X, y, theta)
        assert abs(fit.below_fraction - theta) <= (fit.n_params + 1) / n + 1e-12


def test_quantile_beats_ols_on_pinball_loss():
    gen = rng(21)
    X = gen.standard_normal((40, 2))
    y = X @ np.array([1.0, -2.0]) + gen.standard_normal(40)
    qfit = sk.quantile_fit(X, y, 0.5)
    ols = sk.ols_fit(X, y)
    Xa = np.column_stack([np.ones(40), X])
    assert qfit.pinball_loss <= sk.pinball_loss(y - Xa @ ols.coefficients, 0.5) + 1e-12


def test_quantile_rejects_bad_theta():
    with pytest.raises(ValueError):
        sk.quantile_fit(np.empty((5, 0)), np.arange(5.0), 1.2)


def test_quantile_loss_matches_linear_program_oracle():
    # independent route: the quantile-regression LP
    #   min theta*1'u+ + (1-theta)*1'u-  s.t.  Xb + u+ - u- = y
    from scipy.optimize import linprog

    gen = rng(2718)
    worst = 0.0
    for _ in range(50):
        n = int(gen.integers(10, 25))
        k = int(gen.integers(0, 3))
        theta = float(gen.uniform(0.1, 0.9))
        X = gen.standard_normal((n, k))
        y = gen.standard_normal(n)
        fit = sk.quantile_fit(X, y, theta)

        Xa = np.column_stack([np.ones(n), X])
        m = Xa.shape[1]
        c = np.concatenate([np.zeros(2 * m),
                            np.full(n, theta), np.full(n, 1.0 - theta)])
        A_eq = np.hstack([Xa, -Xa, np.eye(n), -np.eye(n)])
        res = linprog(c, A_eq=A_eq, b_eq=y, bounds=[(0, None)] * (2 * m + 2 * n),
                      method="highs")
        assert res.status == 0
        worst = max(worst, abs(fit.pinball_loss - res.fun))
    assert worst < 1e-8 * 25  # 1e-8 relative at these scales
