"""Vector autoregression: estimation, lag selection, Granger causality,
residual diagnostics, RMS fit measure and impulse responses.

Estimation is equation-by-equation OLS on a shared lag design.  The residual
covariance uses the degrees-of-freedom divisor T_eff - (k*p + d), with d the
number of deterministic terms.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import (
    DegenerateDenominator,
    ExplosiveWarning,
    InsufficientData,
    RankDeficient,
    TooFewObservations,
)
from .panel import PanelSlice
from .stationarity import TestReport


@dataclass(frozen=True)
class VarFit:
    """Estimated VAR(p) for k series.

    ``lag_matrices[i]`` maps variable values at lag i+1 into the current
    period: row = equation, column = source variable.  ``trend_coef`` holds
    the linear-trend loadings when the deterministic spec includes one.
    """

    names: tuple[str, ...]
    p: int
    form: str                       # 'levels' or 'differences'
    deterministic: str              # 'const' or 'const+trend'
    intercept: np.ndarray           # (k,)
    lag_matrices: tuple[np.ndarray, ...]
    trend_coef: np.ndarray | None
    residuals: np.ndarray           # (T_eff, k)
    sigma: np.ndarray               # (k, k)
    nobs: int

    @property
    def k(self) -> int:
        return len(self.names)

    @property
    def companion(self) -> np.ndarray:
        return companion_matrix(self.lag_matrices)

    @property
    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.companion))))

    def fitted(self, values: np.ndarray) -> np.ndarray:
        """One-step in-sample predictions for the rows the fit covers."""
        Z, _ = _lag_design(values, self.p, self.deterministic)
        B = self._stacked_coef()
        return Z @ B

    def _stacked_coef(self) -> np.ndarray:
        d_cols = [self.intercept]
        if self.trend_coef is not None:
            d_cols.append(self.trend_coef)
        blocks = [np.column_stack(d_cols).T] if len(d_cols) > 1 else [self.intercept[None, :]]
        blocks += [A.T for A in self.lag_matrices]
        return np.vstack(blocks)


def companion_matrix(lag_matrices) -> np.ndarray:
    """Stack lag matrices into the (k*p) x (k*p) companion form."""
    p = len(lag_matrices)
    k = lag_matrices[0].shape[0]
    comp = np.zeros((k * p, k * p))
    for i, A in enumerate(lag_matrices):
        comp[:k, i * k:(i + 1) * k] = A
    if p > 1:
        comp[k:, :-k] = np.eye(k * (p - 1))
    return comp


def _lag_design(values: np.ndarray, p: int, deterministic: str):
    """Regressor matrix [1, (trend), y_{t-1}, ..., y_{t-p}] and targets."""
    T, k = values.shape
    rows = np.arange(p, T)
    cols = [np.ones(len(rows))]
    if deterministic == "const+trend":
        cols.append(rows.astype(float))
    for i in range(1, p + 1):
        cols.append(values[rows - i])
    Z = np.column_stack([c if c.ndim > 1 else c[:, None] for c in cols])
    return Z, values[rows]


def _as_matrix(data) -> tuple[tuple[str, ...], np.ndarray]:
    if isinstance(data, PanelSlice):
        return data.names, data.values
    values = np.asarray(data, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    names = tuple(f"y{i + 1}" for i in range(values.shape[1]))
    return names, values


def fit_var(data, p: int, form: str = "levels",
            deterministic: str = "const") -> VarFit:
    """Estimate a VAR(p) by equation-by-equation OLS.

    ``data`` is a PanelSlice or a T x k array already in the requested form
    (levels or differences); ``form`` is recorded, not applied.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if deterministic not in ("const", "const+trend"):
        raise ValueError("deterministic must be 'const' or 'const+trend'")
    names, values = _as_matrix(data)
    T, k = values.shape
    d = 1 if deterministic == "const" else 2
    n_reg = k * p + d
    if T - p <= n_reg:
        raise TooFewObservations(
            f"T - p = {T - p} observations cannot identify {n_reg} regressors"
        )
    Z, Y = _lag_design(values, p, deterministic)
    if np.linalg.matrix_rank(Z) < Z.shape[1]:
        raise RankDeficient("VAR lag design is rank deficient")
    B, _, _, _ = np.linalg.lstsq(Z, Y, rcond=None)
    U = Y - Z @ B
    dof = (T - p) - n_reg
    sigma = (U.T @ U) / dof

    intercept = B[0].copy()
    trend = B[1].copy() if d == 2 else None
    mats = tuple(B[d + i * k: d + (i + 1) * k, :].T.copy() for i in range(p))
    return VarFit(names, p, form, deterministic, intercept, mats, trend,
                  U, sigma, T - p)


# ----------------------------------------------------------------------
# Lag-order selection
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class LagSelection:
    """Information criteria per candidate lag and the selected order."""

    criteria: dict[int, dict[str, float]]
    chosen: int
    rule: str  # 'unanimous' or 'SC-tiebreak'

    def argmin(self, criterion: str) -> int:
        return min(self.criteria, key=lambda p: self.criteria[p][criterion])


def select_lag(data, p_max: int, deterministic: str = "const") -> LagSelection:
    """Evaluate AIC, HQ, SC and FPE for lags 1..p_max on a common sample.

    When the four criteria agree the common argmin is chosen; otherwise the
    SC argmin is.
    """
    if p_max < 1:
        raise ValueError("p_max must be >= 1")
    names, values = _as_matrix(data)
    T, k = values.shape
    d = 1 if deterministic == "const" else 2
    n_eff = T - p_max
    if n_eff <= k * p_max + d:
        raise TooFewObservations(
            f"common sample of {n_eff} cannot identify a VAR({p_max})"
        )

    criteria: dict[int, dict[str, float]] = {}
    for p in range(1, p_max + 1):
        rows = np.arange(p_max, T)
        cols = [np.ones(len(rows))]
        if d == 2:
            cols.append(rows.astype(float))
        for i in range(1, p + 1):
            cols.append(values[rows - i])
        Z = np.column_stack([c if c.ndim > 1 else c[:, None] for c in cols])
        Y = values[rows]
        B = np.linalg.lstsq(Z, Y, rcond=None)[0]
        U = Y - Z @ B
        sigma_ml = (U.T @ U) / n_eff
        sign, logdet = np.linalg.slogdet(sigma_ml)
        if sign <= 0:
            raise TooFewObservations("residual covariance is singular at lag "
                                     f"{p}; sample too short")
        m = k * (k * p + d)            # total free parameters
        s = k * p + d                  # regressors per equation
        criteria[p] = {
            "AIC": logdet + 2.0 * m / n_eff,
            "HQ": logdet + 2.0 * math.log(math.log(n_eff)) * m / n_eff,
            "SC": logdet + math.log(n_eff) * m / n_eff,
            "FPE": float(((n_eff + s) / (n_eff - s)) ** k * math.exp(logdet)),
        }

    argmins = {c: min(criteria, key=lambda p: criteria[p][c])
               for c in ("AIC", "HQ", "SC", "FPE")}
    values_set = set(argmins.values())
    if len(values_set) == 1:
        return LagSelection(criteria, argmins["SC"], "unanimous")
    return LagSelection(criteria, argmins["SC"], "SC-tiebreak")


# ----------------------------------------------------------------------
# Granger causality
# ----------------------------------------------------------------------


def granger_test(data, cause: str, effect: str, p: int,
                 deterministic: str = "const",
                 significance: float = 0.05) -> TestReport:
    """Block-exclusion F test of ``cause`` lags in the ``effect`` equation.

    The unrestricted model is the ``effect`` equation of the full VAR(p) over
    all columns of ``data``; the restricted model drops the ``cause`` lags.
    """
    names, values = _as_matrix(data)
    if cause not in names or effect not in names:
        raise KeyError(f"cause/effect must be among {names}")
    if p < 1:
        raise ValueError("p must be >= 1")
    T, k = values.shape
    d = 1 if deterministic == "const" else 2
    n_reg = k * p + d
    if T - p <= n_reg:
        raise TooFewObservations(
            f"T - p = {T - p} observations cannot identify {n_reg} regressors"
        )

    Z, Y = _lag_design(values, p, deterministic)
    y = Y[:, names.index(effect)]
    rss_u = _rss(Z, y)

    cause_ix = names.index(cause)
    keep = [c for c in range(Z.shape[1])
            if c < d or (c - d) % k != cause_ix]
    rss_r = _rss(Z[:, keep], y)

    dof = (T - p) - n_reg
    if dof <= 0:
        raise TooFewObservations("no residual degrees of freedom")
    fstat = ((rss_r - rss_u) / p) / (rss_u / dof)
    pval = float(stats.f.sf(fstat, p, dof))
    cvs = {name: float(stats.f.isf(level, p, dof))
           for name, level in (("1%", 0.01), ("5%", 0.05), ("10%", 0.10))}
    verdict = "reject" if pval <= significance else "fail-to-reject"
    return TestReport("granger", float(fstat), p, deterministic,
                      (pval, pval), cvs, significance, verdict)


def _rss(X: np.ndarray, y: np.ndarray) -> float:
    beta = np.linalg.lstsq(X, y, rcond=None)[0]
    r = y - X @ beta
    return float(r @ r)


# ----------------------------------------------------------------------
# Jarque-Bera normality diagnostics
# ----------------------------------------------------------------------


def jarque_bera(residuals, significance: float = 0.05):
    """JB = n/6 * (skew^2 + excess_kurtosis^2 / 4) against chi-square(2).

    A matrix input is tested column-by-column and summarised by the combined
    statistic (sum of per-column JB, chi-square with 2k dof); returns a single
    TestReport for a vector, else (per_column_reports, combined_report).
    """
    arr = np.asarray(residuals, dtype=float)
    if arr.ndim == 1:
        return _jb_single(arr, significance)
    reports = [_jb_single(arr[:, j], significance) for j in range(arr.shape[1])]
    stat = float(sum(r.statistic for r in reports))
    df = 2 * arr.shape[1]
    pval = float(stats.chi2.sf(stat, df))
    cvs = {name: float(stats.chi2.isf(level, df))
           for name, level in (("1%", 0.01), ("5%", 0.05), ("10%", 0.10))}
    combined = TestReport("jarque-bera-multivariate", stat, 0, "none",
                          (pval, pval), cvs, significance,
                          "reject" if pval <= significance else "fail-to-reject")
    return reports, combined


def _jb_single(x: np.ndarray, significance: float) -> TestReport:
    n = len(x)
    if n < 8:
        raise InsufficientData("Jarque-Bera needs at least 8 observations")
    z = x - x.mean()
    m2 = float(np.mean(z**2))
    if m2 <= 0:
        raise InsufficientData("degenerate (constant) residual series")
    skew = float(np.mean(z**3)) / m2**1.5
    kurt = float(np.mean(z**4)) / m2**2 - 3.0
    stat = n / 6.0 * (skew**2 + kurt**2 / 4.0)
    pval = float(stats.chi2.sf(stat, 2))
    cvs = {name: float(stats.chi2.isf(level, 2))
           for name, level in (("1%", 0.01), ("5%", 0.05), ("10%", 0.10))}
    return TestReport("jarque-bera", float(stat), 0, "none", (pval, pval),
                      cvs, significance,
                      "reject" if pval <= significance else "fail-to-reject")


# ----------------------------------------------------------------------
# RMS fit measure
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class RmsReport:
    """Root-mean-square one-step fit error with an N - L divisor.

    The last N - L observations are compared against their one-step
    predictions from the order-L model.
    """

    rms: float
    n_points: int   # N
    order: int      # L


def model_rms(fit: VarFit, data) -> dict[str, RmsReport]:
    """Per-equation and pooled RMS of the one-step in-sample fit."""
    _, values = _as_matrix(data)
    N, k = values.shape
    L = fit.p
    if N - L <= 0:
        raise DegenerateDenominator(f"N - L = {N - L} must be positive")
    fitted = fit.fitted(values)
    actual = values[L:]
    err = actual - fitted
    out = {}
    for j, name in enumerate(fit.names):
        out[name] = RmsReport(float(np.sqrt(np.sum(err[:, j] ** 2) / (N - L))), N, L)
    out["pooled"] = RmsReport(float(np.sqrt(np.sum(err**2) / (k * (N - L)))), N, L)
    return out


# ----------------------------------------------------------------------
# Impulse responses
# ----------------------------------------------------------------------


def ma_coefficients(lag_matrices, horizon: int) -> np.ndarray:
    """Moving-average matrices Psi_0..Psi_horizon via companion powers."""
    k = lag_matrices[0].shape[0]
    comp = companion_matrix(lag_matrices)
    psis = np.empty((horizon + 1, k, k))
    power = np.eye(comp.shape[0])
    for h in range(horizon + 1):
        psis[h] = power[:k, :k]
        power = comp @ power
    return psis


def irf(fit: VarFit, horizon: int, kind: str = "generalized") -> np.ndarray:
    """Impulse responses, shape (horizon+1, k, k): [h, i, j] is the response
    of variable i to a shock in j after h periods.

    'generalized' scales the MA matrices by the residual-covariance columns
    (one-standard-deviation shocks, no orthogonalisation);
    'recursive-structural' returns unit-shock responses, the identity-
    transform case of the triangular contemporaneous scheme.
    """
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    if kind not in ("generalized", "recursive-structural"):
        raise ValueError("kind must be 'generalized' or 'recursive-structural'")
    radius = fit.spectral_radius
    if radius > 1.0 + 1e-10:
        warnings.warn(
            f"companion spectral radius {radius:.4f} exceeds 1; impulse "
            "responses diverge", ExplosiveWarning, stacklevel=2)
    psis = ma_coefficients(fit.lag_matrices, horizon)
    if kind == "recursive-structural":
        return psis
    scale = 1.0 / np.sqrt(np.diag(fit.sigma))
    return psis @ fit.sigma * scale[None, None, :]
