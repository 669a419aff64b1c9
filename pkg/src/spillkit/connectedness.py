"""Quantile-VAR spillover connectedness.

Fits per-quantile VARs by pinball-loss regression, turns them (or mean VARs)
into generalized forecast-error variance decompositions, and derives the full
set of connectedness measures: TCI, directional TO/FROM, NET, pairwise NPDC
and dominance counts, plus sweeps over a quantile grid and graph exports.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ExplosiveWarning, OrderingRequired
from .regression import QuantileFit, quantile_fit
from .varmodel import VarFit, companion_matrix, ma_coefficients, _as_matrix


# ----------------------------------------------------------------------
# Quantile VAR
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class QvarEntry:
    """Parameter set of one quantile: intercepts, lag matrices, optional
    strictly-lower-triangular contemporaneous matrix and pseudo covariance."""

    theta: float
    intercept: np.ndarray
    lag_matrices: tuple[np.ndarray, ...]
    contemporaneous: np.ndarray | None
    pseudo_sigma: np.ndarray
    residuals: np.ndarray
    equation_fits: tuple[QuantileFit, ...]

    @property
    def k(self) -> int:
        return len(self.intercept)

    def reduced_form(self) -> tuple[tuple[np.ndarray, ...], np.ndarray]:
        """Lag matrices and innovation covariance after absorbing the
        contemporaneous matrix, ready for MA expansion."""
        if self.contemporaneous is None:
            return self.lag_matrices, self.pseudo_sigma
        m = np.linalg.inv(np.eye(self.k) - self.contemporaneous)
        mats = tuple(m @ a for a in self.lag_matrices)
        return mats, m @ self.pseudo_sigma @ m.T


@dataclass(frozen=True)
class QvarFit:
    """Per-quantile VAR coefficient sets over an ordered quantile grid.

    The recursive (structural) variant conditions each equation on the
    contemporaneous values of the variables ordered before it, which is what
    the strictly-lower-triangular contemporaneous matrix encodes.
    """

    names: tuple[str, ...]
    p: int
    entries: tuple[QvarEntry, ...]

    @property
    def theta_grid(self) -> tuple[float, ...]:
        return tuple(e.theta for e in self.entries)

    def entry(self, theta: float) -> QvarEntry:
        for e in self.entries:
            if abs(e.theta - theta) < 1e-12:
                return e
        raise KeyError(f"no entry for theta={theta}")

    def single(self) -> QvarEntry:
        if len(self.entries) != 1:
            raise ValueError("fit holds more than one quantile")
        return self.entries[0]


def validate_theta_grid(thetas) -> tuple[float, ...]:
    """Quantile grids must be strictly increasing inside (0, 1)."""
    grid = tuple(float(t) for t in thetas)
    if not grid:
        raise ValueError("empty quantile grid")
    if any(not 0.0 < t < 1.0 for t in grid):
        raise ValueError("quantiles must lie strictly inside (0, 1)")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError(f"quantile grid must be strictly increasing, got {grid}")
    return grid


def fit_qvar(data, p: int, theta: float, structural: bool = False,
             ordering=None) -> QvarFit:
    """Fit one quantile of a VAR(p) by equation-wise pinball regression.

    With ``structural=True`` an explicit recursive ``ordering`` of the
    variable names is required; equation i then also regresses on the
    contemporaneous values of the variables ordered before it.
    """
    names, values = _as_matrix(data)
    if structural:
        if ordering is None:
            raise OrderingRequired(
                "structural estimation needs an explicit recursive ordering "
                "of the variables")
        ordering = tuple(ordering)
        if sorted(ordering) != sorted(names):
            raise OrderingRequired(
                f"ordering {ordering} does not match variables {names}")
        perm = [names.index(n) for n in ordering]
        values = values[:, perm]
        names = ordering
    entry = _fit_qvar_entry(names, values, p, float(theta), structural)
    return QvarFit(names, p, (entry,))


def fit_qvar_grid(data, p: int, thetas, structural: bool = False,
                  ordering=None) -> QvarFit:
    """Fit a whole quantile grid; fails fast on an unordered grid."""
    grid = validate_theta_grid(thetas)
    fits = [fit_qvar(data, p, t, structural, ordering) for t in grid]
    return QvarFit(fits[0].names, p, tuple(f.entries[0] for f in fits))


def _fit_qvar_entry(names, values, p, theta, structural) -> QvarEntry:
    T, k = values.shape
    rows = np.arange(p, T)
    lags = np.column_stack([values[rows - i] for i in range(1, p + 1)])
    Y = values[rows]

    intercept = np.empty(k)
    mats = [np.empty((k, k)) for _ in range(p)]
    a0 = np.zeros((k, k)) if structural else None
    resid = np.empty((len(rows), k))
    eq_fits = []
    for i in range(k):
        if structural and i > 0:
            X = np.column_stack([Y[:, :i], lags])
        else:
            X = lags
        fit = quantile_fit(X, Y[:, i], theta)
        eq_fits.append(fit)
        coef = fit.coefficients
        intercept[i] = coef[0]
        offset = 1
        if structural and i > 0:
            a0[i, :i] = coef[offset:offset + i]
            offset += i
        for m in range(p):
            mats[m][i, :] = coef[offset + m * k: offset + (m + 1) * k]
        resid[:, i] = Y[:, i] - np.column_stack([np.ones(len(rows)), X]) @ coef

    # pseudo covariance of the quantile residuals, same dof divisor as the
    # mean VAR (the per-equation fits guarantee it is positive)
    dof = len(rows) - (k * p + 1)
    sigma = (resid.T @ resid) / dof
    return QvarEntry(theta, intercept, tuple(mats), a0, sigma, resid,
                     tuple(eq_fits))


# ----------------------------------------------------------------------
# Generalized FEVD
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class GfevdTable:
    """Generalized variance shares in percent; every row sums to 100."""

    names: tuple[str, ...]
    horizon: int
    shares: np.ndarray  # (k, k), [i, j] = share of i's variance due to j

    @property
    def k(self) -> int:
        return len(self.names)

    @property
    def own_shares(self) -> np.ndarray:
        return np.diag(self.shares).copy()


def _resolve_system(fit, theta):
    if isinstance(fit, VarFit):
        return fit.names, fit.lag_matrices, fit.sigma
    if isinstance(fit, QvarFit):
        entry = fit.entry(theta) if theta is not None else fit.single()
        mats, sigma = entry.reduced_form()
        return fit.names, mats, sigma
    if isinstance(fit, QvarEntry):
        mats, sigma = fit.reduced_form()
        names = tuple(f"y{i + 1}" for i in range(fit.k))
        return names, mats, sigma
    raise TypeError(f"cannot decompose {type(fit).__name__}")


def gfevd(fit, horizon: int, theta: float | None = None) -> GfevdTable:
    """Order-invariant variance decomposition over forecast steps 0..H-1."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    names, mats, sigma = _resolve_system(fit, theta)
    radius = float(np.max(np.abs(np.linalg.eigvals(companion_matrix(mats)))))
    if radius > 1.0 + 1e-10:
        warnings.warn(
            f"companion spectral radius {radius:.4f} exceeds 1; variance "
            "shares may be dominated by the last step", ExplosiveWarning,
            stacklevel=2)
    shares = gfevd_from_coefficients(mats, sigma, horizon)
    return GfevdTable(tuple(names), horizon, shares)


def gfevd_from_coefficients(lag_matrices, sigma, horizon: int) -> np.ndarray:
    """Generalized shares from explicit coefficients (no estimation)."""
    sigma = np.asarray(sigma, dtype=float)
    k = sigma.shape[0]
    psis = ma_coefficients(lag_matrices, horizon - 1)
    diag = np.diag(sigma)
    num = np.zeros((k, k))
    den = np.zeros(k)
    for h in range(horizon):
        ps = psis[h] @ sigma
        num += ps**2 / diag[None, :]
        den += np.einsum("ij,ij->i", ps, psis[h])
    shares = num / den[:, None]
    shares = 100.0 * shares / shares.sum(axis=1, keepdims=True)
    return shares


# ----------------------------------------------------------------------
# Connectedness report
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class ConnectednessReport:
    """Directional spillover summary derived from a GFEVD table.

    ``npdc[i, j] = shares[j, i] - shares[i, j]``: positive means i dominates
    j.  ``npdc_degree[i]`` counts dominated peers.  ``tci`` is the average
    cross-entity share (equals mean FROM and mean TO).
    """

    shares: GfevdTable
    from_others: np.ndarray
    to_others: np.ndarray
    total_including_own: np.ndarray
    net: np.ndarray
    npdc: np.ndarray
    npdc_degree: np.ndarray
    tci: float

    @property
    def names(self) -> tuple[str, ...]:
        return self.shares.names


def connectedness_report(table: GfevdTable) -> ConnectednessReport:
    """All directional measures implied by a variance-share table."""
    S = table.shares
    own = np.diag(S)
    from_others = S.sum(axis=1) - own
    to_others = S.sum(axis=0) - own
    total_incl = to_others + own
    net = to_others - from_others
    npdc = S.T - S
    degree = (npdc > 0).sum(axis=1).astype(int)
    tci = float(from_others.sum() / table.k)
    return ConnectednessReport(table, from_others, to_others, total_incl,
                               net, npdc, degree, tci)


def check_report_identities(rep: ConnectednessReport, tol: float = 1e-8) -> None:
    """Assert the arithmetic identities every report must satisfy."""
    S = rep.shares.shares
    own = np.diag(S)
    assert np.allclose(S.sum(axis=1), 100.0, atol=tol)
    assert np.allclose(rep.from_others, 100.0 - own, atol=tol)
    assert np.allclose(rep.net, rep.to_others - rep.from_others, atol=tol)
    assert abs(rep.net.sum()) <= tol * rep.shares.k
    assert np.allclose(rep.total_including_own, rep.to_others + own, atol=tol)
    assert np.allclose(rep.npdc, -rep.npdc.T, atol=tol)
    assert np.array_equal(rep.npdc_degree, (rep.npdc > 0).sum(axis=1))
    assert abs(rep.tci - rep.to_others.sum() / rep.shares.k) <= tol


# ----------------------------------------------------------------------
# Quantile sweep
# ----------------------------------------------------------------------


def default_theta_grid() -> tuple[float, ...]:
    """0.05, 0.10, ..., 0.95."""
    return tuple(round(0.05 * i, 2) for i in range(1, 20))


@dataclass(frozen=True)
class SweepRow:
    """One quantile's directional contributions, or its failure record."""

    theta: float
    ok: bool
    error: str | None
    from_others: np.ndarray | None
    to_others: np.ndarray | None

    def total(self, direction: str) -> float:
        vec = self.from_others if direction == "from" else self.to_others
        return float(vec.sum())

    def stdev(self, direction: str) -> float:
        vec = self.from_others if direction == "from" else self.to_others
        return float(np.std(vec, ddof=1))


@dataclass(frozen=True)
class SweepResult:
    names: tuple[str, ...]
    horizon: int
    p: int
    rows: tuple[SweepRow, ...]


def quantile_sweep(data, p: int, horizon: int, thetas=None) -> SweepResult:
    """Connectedness contributions across a quantile grid.

    Solver failures at individual quantiles are recorded per row and do not
    abort the sweep.
    """
    grid = validate_theta_grid(thetas if thetas is not None else default_theta_grid())
    names, values = _as_matrix(data)
    rows = []
    for theta in grid:
        try:
            fit = fit_qvar(values, p, theta)
            table = gfevd(fit, horizon)
            rep = connectedness_report(table)
            rows.append(SweepRow(theta, True, None, rep.from_others,
                                 rep.to_others))
        except Exception as exc:  # noqa: BLE001 - per-row failure reporting
            rows.append(SweepRow(theta, False, f"{type(exc).__name__}: {exc}",
                                 None, None))
    return SweepResult(tuple(names), horizon, p, tuple(rows))


@dataclass(frozen=True)
class WindowedReport:
    """Connectedness report of one rolling window (or its failure record)."""

    end_index: int
    end_year: int | None
    report: ConnectednessReport | None
    error: str | None

    @property
    def ok(self) -> bool:
        return self.report is not None


def rolling_connectedness(data, p: int, horizon: int, theta: float,
                          window: int) -> list[WindowedReport]:
    """Per-window QVAR connectedness reports over a sliding sample.

    Serves the over-time NPDC/NET views: one report per contiguous window of
    ``window`` observations; per-window failures are recorded, not raised.
    """
    names, values = _as_matrix(data)
    years = data.years if hasattr(data, "years") else None
    T = values.shape[0]
    if window > T:
        raise ValueError(f"window {window} exceeds sample length {T}")
    out = []
    for start in range(T - window + 1):
        end = start + window - 1
        end_year = int(years[end]) if years is not None else None
        try:
            fit = fit_qvar(values[start:start + window], p, theta)
            table = gfevd(fit, horizon)
            rep = connectedness_report(
                GfevdTable(tuple(names), horizon, table.shares))
            out.append(WindowedReport(end, end_year, rep, None))
        except Exception as exc:  # noqa: BLE001 - per-window failure reporting
            out.append(WindowedReport(end, end_year, None,
                                      f"{type(exc).__name__}: {exc}"))
    return out


# ----------------------------------------------------------------------
# Structural quantile impulse responses
# ----------------------------------------------------------------------


def structural_quantile_irf(fit, horizon: int, theta: float | None = None) -> np.ndarray:
    """Responses of the recursive quantile system to unit structural shocks.

    Shape (horizon+1, k, k): [h, i, j] is variable i's response to a shock in
    equation j.  Requires a structural fit (triangular contemporaneous
    matrix); the impact response is (I - A0)^-1.
    """
    entry = fit.entry(theta) if isinstance(fit, QvarFit) and theta is not None \
        else (fit.single() if isinstance(fit, QvarFit) else fit)
    if entry.contemporaneous is None:
        raise ValueError("structural impulse responses need a structural fit")
    k = entry.k
    a0 = entry.contemporaneous
    if np.any(np.triu(a0) != 0):
        raise ValueError("contemporaneous matrix must be strictly lower triangular")
    m = np.linalg.inv(np.eye(k) - a0)  # unit lower triangular, always invertible
    mats = tuple(m @ a for a in entry.lag_matrices)
    psis = ma_coefficients(mats, horizon)
    return psis @ m


# ----------------------------------------------------------------------
# Network export (NPDC graph)
# ----------------------------------------------------------------------


def npdc_to_dot(rep: ConnectednessReport, threshold: float = 0.0) -> str:
    """GraphViz digraph: dominator -> dominated, weight = NPDC magnitude."""
    lines = ["digraph npdc {"]
    for i, name in enumerate(rep.names):
        role = "transmitter" if rep.net[i] > 0 else "recipient"
        lines.append(
            f'  "{name}" [net="{rep.net[i]:.4f}", role="{role}"];')
    k = rep.shares.k
    for i in range(k):
        for j in range(k):
            w = rep.npdc[i, j]
            if i != j and w > threshold:
                lines.append(
                    f'  "{rep.names[i]}" -> "{rep.names[j]}" '
                    f'[weight="{w:.4f}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def npdc_to_node_link(rep: ConnectednessReport, threshold: float = 0.0) -> dict:
    """node-link JSON dict mirroring the DOT export."""
    nodes = [{"id": name, "net": round(float(rep.net[i]), 6),
              "role": "transmitter" if rep.net[i] > 0 else "recipient"}
             for i, name in enumerate(rep.names)]
    links = []
    k = rep.shares.k
    for i in range(k):
        for j in range(k):
            w = float(rep.npdc[i, j])
            if i != j and w > threshold:
                links.append({"source": rep.names[i], "target": rep.names[j],
                              "weight": round(w, 6)})
    return {"directed": True, "nodes": nodes, "links": links}


def npdc_node_link_json(rep: ConnectednessReport, threshold: float = 0.0) -> str:
    return json.dumps(npdc_to_node_link(rep, threshold), indent=2,
                      sort_keys=True) + "\n"
