"""Least-squares and quantile-regression kernels.

Covers plain OLS with an overall F test, rolling-window OLS over an annual
panel, and pinball-loss quantile regression.  The quantile solver is a
smoothed IRLS pass refined by exact coordinate-wise minimisation, so fitted
solutions sit on vertices of the piecewise-linear loss surface.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import (
    RankDeficient,
    SolverDiverged,
    TooFewRows,
    WindowExceedsSample,
    WindowTooSmall,
)
from .panel import Panel


# ----------------------------------------------------------------------
# OLS
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class OlsFit:
    """OLS estimate with the all-slopes-zero F test.

    ``coefficients[0]`` is the intercept when one was added.
    """

    coefficients: np.ndarray
    residuals: np.ndarray
    r_squared: float
    f_statistic: float
    f_pvalue: float
    n_obs: int
    n_params: int

    def predict(self, x: np.ndarray) -> np.ndarray:
        X = _augment(np.asarray(x, dtype=float))
        return X @ self.coefficients


def _augment(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    return np.column_stack([np.ones(len(x)), x])


def ols_fit(x: np.ndarray, y: np.ndarray, add_intercept: bool = True) -> OlsFit:
    """Least-squares fit of ``y`` on ``x`` (intercept prepended by default)."""
    y = np.asarray(y, dtype=float).ravel()
    X = _augment(x) if add_intercept else np.asarray(x, dtype=float)
    n, k = X.shape
    if n <= k:
        raise TooFewRows(f"{n} rows for {k} parameters")
    if np.linalg.matrix_rank(X) < k:
        raise RankDeficient("design matrix is rank deficient")

    beta, _, _, _ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta
    rss = float(resid @ resid)
    tss = float(np.sum((y - y.mean()) ** 2)) if add_intercept else float(y @ y)
    r2 = 1.0 - rss / tss if tss > 0 else (1.0 if rss == 0 else 0.0)

    n_slopes = k - 1 if add_intercept else k
    if n_slopes >= 1 and tss > 0 and rss > 0:
        fstat = (tss - rss) / n_slopes / (rss / (n - k))
        fp = float(stats.f.sf(fstat, n_slopes, n - k))
    elif rss == 0 and n_slopes >= 1:
        fstat, fp = float("inf"), 0.0
    else:
        fstat, fp = float("nan"), float("nan")
    return OlsFit(beta, resid, r2, float(fstat), fp, n, k)


# ----------------------------------------------------------------------
# Rolling OLS
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class ModelSpec:
    """A regression of one panel variable on others, by variable name."""

    name: str
    dependent: str
    regressors: tuple[str, ...]

    @property
    def n_variables(self) -> int:
        return 1 + len(self.regressors)


#: the three stock research-question models over the offshoring roles
RQ_MODELS = {
    "RQ1": ModelSpec("RQ1", "fdi", ("trd", "ifr")),
    "RQ2": ModelSpec("RQ2", "inv", ("trd", "ifr")),
    "RQ3": ModelSpec("RQ3", "iep", ("fdi",)),
}


@dataclass(frozen=True)
class RollingResult:
    """Per-window OLS fits plus the aggregated significance flag.

    ``flag`` is 'plain', 'p10', 'p05' or 'p01': the tightest level cleared by
    the *median* per-window F-test p-value (the aggregation rule is ours; the
    table convention marks whole cells).  Windows with a degenerate regressor
    are skipped and listed in ``skipped_windows``.
    """

    window: int
    fits: tuple[OlsFit, ...]
    mean_r_squared: float
    flag: str
    skipped_windows: tuple[int, ...] = ()

    @property
    def n_windows(self) -> int:
        return len(self.fits) + len(self.skipped_windows)


FLAG_LEVELS = (("p01", 0.01), ("p05", 0.05), ("p10", 0.10))
FLAG_MARKERS = {"plain": "", "p10": "·", "p05": "*", "p01": "**"}


def rolling_ols(panel: Panel, model: ModelSpec, window: int, entity: str) -> RollingResult:
    """Rolling-window OLS of ``model`` for one entity.

    The window must be strictly larger than the number of model variables
    (dependent plus regressors), otherwise the per-window fit is saturated.
    """
    if window <= model.n_variables:
        raise WindowTooSmall(
            f"rolling window ({window}) must be larger than the number of "
            f"model variables ({model.n_variables})"
        )
    cols = [model.dependent, *model.regressors]
    block = panel.slice_entity(entity, cols)
    T = block.nobs
    if window > T:
        raise WindowExceedsSample(f"window {window} exceeds sample length {T}")

    y = block.values[:, 0]
    X = block.values[:, 1:]
    fits: list[OlsFit] = []
    skipped: list[int] = []
    for start in range(T - window + 1):
        sl = slice(start, start + window)
        xw = X[sl]
        if np.any(np.ptp(xw, axis=0) == 0):
            skipped.append(start)
            continue
        fits.append(ols_fit(xw, y[sl]))
    if not fits:
        raise WindowTooSmall("every window had a degenerate regressor")

    mean_r2 = float(np.mean([f.r_squared for f in fits]))
    med_p = float(np.median([f.f_pvalue for f in fits]))
    flag = "plain"
    for name, level in FLAG_LEVELS:
        if med_p <= level:
            flag = name
            break
    return RollingResult(window, tuple(fits), mean_r2, flag, tuple(skipped))


def rolling_table(panel: Panel, model: ModelSpec, windows) -> dict:
    """Mean R-squared per (entity, window) for a grid of window sizes."""
    out: dict[str, dict[int, RollingResult]] = {}
    for ent in panel.entities:
        out[ent] = {w: rolling_ols(panel, model, w, ent) for w in windows}
    return out


# ----------------------------------------------------------------------
# Quantile regression (pinball loss)
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class QuantileFit:
    """Quantile-regression estimate at a single quantile ``theta``."""

    theta: float
    coefficients: np.ndarray
    pinball_loss: float
    below_fraction: float
    n_obs: int
    n_params: int


def pinball_loss(u: np.ndarray, theta: float) -> float:
    """Sum of the check-function losses u * (theta - 1[u < 0])."""
    u = np.asarray(u, dtype=float)
    return float(np.sum(u * (theta - (u < 0))))


def quantile_fit(x: np.ndarray, y: np.ndarray, theta: float,
                 add_intercept: bool = True, tol: float = 1e-8,
                 max_sweeps: int = 500) -> QuantileFit:
    """Minimise the pinball loss of ``y`` on ``x`` at quantile ``theta``.

    Starts from smoothed IRLS iterations, polishes each coefficient by exact
    one-dimensional (weighted-quantile) minimisation, then descends along the
    basis edge directions of the current vertex until no edge improves.
    Coordinate moves alone can stall off the optimum of this non-separable
    loss; the edge descent makes the final vertex globally optimal.
    """
    if not 0.0 < theta < 1.0:
        raise ValueError("theta must lie strictly inside (0, 1)")
    y = np.asarray(y, dtype=float).ravel()
    X = _augment(x) if add_intercept else np.asarray(x, dtype=float)
    n, k = X.shape
    if n <= k:
        raise TooFewRows(f"{n} rows for {k} parameters")
    if np.linalg.matrix_rank(X) < k:
        raise RankDeficient("design matrix is rank deficient")

    beta = np.linalg.lstsq(X, y, rcond=None)[0]
    beta = _irls(X, y, theta, beta)
    beta, loss, converged = _coordinate_polish(X, y, theta, beta, tol, max_sweeps)
    if not converged:
        raise SolverDiverged(
            f"coordinate polish did not converge within {max_sweeps} sweeps"
        )
    beta, loss, converged = _edge_polish(X, y, theta, beta, tol, max_sweeps)
    if not converged:
        raise SolverDiverged(
            f"edge descent did not converge within {max_sweeps} passes"
        )
    resid = y - X @ beta
    below = float(np.mean(resid < 0))
    return QuantileFit(float(theta), beta, loss, below, n, k)


def _irls(X, y, theta, beta, outer: int = 12, inner: int = 3):
    """Smoothed iteratively reweighted least squares warm start."""
    scale = max(float(np.std(y)), 1e-12)
    eps = 1e-2 * scale
    for _ in range(outer):
        for _ in range(inner):
            r = y - X @ beta
            asym = np.where(r >= 0, theta, 1.0 - theta)
            w = asym / np.maximum(np.abs(r), eps)
            Xw = X * w[:, None]
            try:
                beta_new = np.linalg.solve(Xw.T @ X, Xw.T @ y)
            except np.linalg.LinAlgError:
                return beta
            beta = beta_new
        eps = max(eps * 0.1, 1e-12 * scale)
    return beta


def _coordinate_min(resid, beta_j, xj, theta):
    """Exact minimiser of the pinball loss along one coordinate.

    The 1-D problem is a weighted asymmetric quantile over the breakpoints
    z_i / x_ij; the optimum is the first breakpoint where the cumulative
    weight crosses sum(w * alpha).
    """
    nz = xj != 0
    if not nz.any():
        return beta_j
    z = resid[nz] + xj[nz] * beta_j
    t = z / xj[nz]
    w = np.abs(xj[nz])
    alpha = np.where(xj[nz] > 0, theta, 1.0 - theta)
    order = np.argsort(t, kind="stable")
    t_sorted = t[order]
    cum = np.cumsum(w[order])
    target = float(np.sum(w * alpha))
    idx = int(np.searchsorted(cum, target - 1e-12 * (1 + abs(target))))
    idx = min(idx, len(t_sorted) - 1)
    return t_sorted[idx]


def _coordinate_polish(X, y, theta, beta, tol, max_sweeps):
    """Cyclic exact minimisation of the pinball loss in each coordinate.

    Converges when a full sweep changes no coefficient (an exact fixed point)
    or when two consecutive sweeps fail to reduce the loss.
    """
    beta = beta.copy()
    resid = y - X @ beta
    loss = pinball_loss(resid, theta)
    stalled = 0
    for _ in range(max_sweeps):
        prev = loss
        changed = False
        for j in range(X.shape[1]):
            xj = X[:, j]
            new_bj = _coordinate_min(resid, beta[j], xj, theta)
            if new_bj != beta[j]:
                resid = resid - xj * (new_bj - beta[j])
                beta[j] = new_bj
                changed = True
        loss = pinball_loss(resid, theta)
        if not changed:
            return beta, loss, True
        if prev - loss <= tol * (1.0 + abs(prev)):
            stalled += 1
            if stalled >= 2:
                return beta, loss, True
        else:
            stalled = 0
    return beta, loss, False


def _pivot_basis(X, resid):
    """Indices of m independent rows with the smallest residuals."""
    m = X.shape[1]
    order = np.argsort(np.abs(resid), kind="stable")
    basis: list[int] = []
    for i in order:
        trial = basis + [int(i)]
        if np.linalg.matrix_rank(X[trial]) == len(trial):
            basis = trial
            if len(basis) == m:
                return np.array(basis)
    return None


def _edge_polish(X, y, theta, beta, tol, max_passes):
    """Descend along the basis edge directions of the current vertex.

    The solution of the pinball problem sits at a vertex interpolating m
    observations; at a vertex the only descent directions are the edges
    d_l = X_B^{-1} e_l, each searched exactly with the weighted-quantile
    rule.  Terminates when no edge strictly improves the loss.
    """
    n, m = X.shape
    beta = beta.copy()
    resid = y - X @ beta
    loss = pinball_loss(resid, theta)
    for _ in range(max_passes):
        basis = _pivot_basis(X, resid)
        if basis is None:
            return beta, loss, True  # no full-rank near-active set; keep point
        # move onto the interpolating vertex when that does not hurt
        try:
            beta_v = np.linalg.solve(X[basis], y[basis])
        except np.linalg.LinAlgError:
            return beta, loss, True
        resid_v = y - X @ beta_v
        loss_v = pinball_loss(resid_v, theta)
        if loss_v <= loss + tol * (1.0 + abs(loss)):
            beta, resid, loss = beta_v, resid_v, loss_v
        directions = np.linalg.inv(X[basis])  # columns are the edge directions
        edge_slopes = X @ directions          # (n, m)
        improved = False
        for l in range(m):
            xj = edge_slopes[:, l]
            t_star = _coordinate_min(resid, 0.0, xj, theta)
            if t_star == 0.0:
                continue
            new_resid = resid - xj * t_star
            new_loss = pinball_loss(new_resid, theta)
            if new_loss < loss - tol * (1.0 + abs(loss)):
                beta = beta + directions[:, l] * t_star
                resid, loss = new_resid, new_loss
                improved = True
                break  # re-derive the basis at the new vertex
        if not improved:
            return beta, loss, True
    return beta, loss, False
