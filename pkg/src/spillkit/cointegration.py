"""Johansen trace test for cointegration rank, with pairwise grids.

The reduced-rank regression partials lagged differences (and any unrestricted
deterministic terms) out of both the differenced series and the lagged-level
block, then solves the generalized eigenproblem of the residual cross-product
matrices.  Critical values are the Osterwald-Lenum (1992) asymptotic trace
tables; an independent Monte Carlo check of the embedded entries lives in
``tools/check_johansen_critical_values.py`` with its record in
``docs/johansen_critical_values_check.md``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularMomentMatrix, TooFewObservations
from .varmodel import _as_matrix, select_lag

#: Osterwald-Lenum (1992) asymptotic critical values of the trace statistic,
#: keyed by deterministic spec, then k - r = 1..5, as (90%, 95%, 99%).
#: 'restricted-constant' is Table 1* (constant inside the cointegration
#: relation), 'none' is Table 0, 'restricted-trend' is Table 2*.
TRACE_CRITICAL_VALUES = {
    "none": {
        1: (2.86, 3.84, 6.51),
        2: (10.47, 12.53, 16.31),
        3: (21.63, 24.31, 29.75),
        4: (36.58, 39.89, 45.58),
        5: (55.44, 59.46, 66.52),
    },
    "restricted-constant": {
        1: (7.52, 9.24, 12.97),
        2: (17.85, 19.96, 24.60),
        3: (32.00, 34.91, 41.07),
        4: (49.65, 53.12, 60.16),
        5: (71.86, 76.07, 84.45),
    },
    "restricted-trend": {
        1: (10.49, 12.25, 16.26),
        2: (22.76, 25.32, 30.45),
        3: (39.06, 42.44, 48.45),
        4: (59.14, 62.99, 70.05),
        5: (83.20, 87.31, 96.58),
    },
}

_CV_LEVELS = ("90%", "95%", "99%")


@dataclass(frozen=True)
class JohansenResult:
    """Trace statistics and verdicts for ranks r = 0..k-1.

    Eigenvalues are sorted descending in [0, 1); trace(r) equals
    -(T - p) * sum_{i > r} ln(1 - lambda_i).  ``degenerate`` flags exact
    linear dependence among the levels (an eigenvalue pinned at ~1).
    """

    names: tuple[str, ...]
    p: int
    deterministic: str
    nobs: int
    eigenvalues: np.ndarray
    trace_statistics: np.ndarray
    critical_values: tuple[dict[str, float] | None, ...]
    verdicts: tuple[str | None, ...]
    significance: float
    degenerate: bool = False

    @property
    def k(self) -> int:
        return len(self.names)

    def rejected_at(self, r: int) -> bool:
        return self.verdicts[r] == "reject"


def johansen_trace(data, p: int, det: str = "restricted-constant",
                   significance: float = 0.05) -> JohansenResult:
    """Johansen trace test on k level series with VAR lag order ``p``.

    ``det`` picks the deterministic specification: 'none',
    'restricted-constant' (constant in the cointegration space) or
    'restricted-trend' (trend in the space, unrestricted constant outside).
    """
    if det not in TRACE_CRITICAL_VALUES:
        raise ValueError(f"unknown deterministic spec {det!r}")
    if p < 1:
        raise ValueError("p must be >= 1")
    names, x = _as_matrix(data)
    T, k = x.shape
    if k < 2:
        raise ValueError("need at least two series")
    # the statistic is invariant to per-series rescaling; standardising up
    # front keeps the moment matrices well conditioned under wild units
    col_scale = x.std(axis=0)
    col_scale[col_scale == 0] = 1.0
    x = x / col_scale
    n_eff = T - p
    n_diff_reg = k * (p - 1) + (1 if det == "restricted-trend" else 0)
    if n_eff <= n_diff_reg + k + 1:
        raise TooFewObservations(
            f"effective sample {n_eff} too short for lag order {p}"
        )

    dx = np.diff(x, axis=0)                       # dx[s] = x[s+1] - x[s]
    rows = np.arange(p - 1, len(dx))              # difference obs used
    d0 = dx[rows]                                 # targets: delta x_t
    levels = x[rows]                              # x_{t-1}

    z_cols = [levels]
    if det == "restricted-constant":
        z_cols.append(np.ones((len(rows), 1)))
    elif det == "restricted-trend":
        z_cols.append((rows + 1.0)[:, None])
    z1 = np.column_stack(z_cols)

    w_cols = [dx[rows - i] for i in range(1, p)]
    if det == "restricted-trend":
        w_cols.append(np.ones((len(rows), 1)))
    if w_cols:
        W = np.column_stack([c if c.ndim > 1 else c[:, None] for c in w_cols])
        r0 = d0 - W @ np.linalg.lstsq(W, d0, rcond=None)[0]
        r1 = z1 - W @ np.linalg.lstsq(W, z1, rcond=None)[0]
    else:
        r0, r1 = d0, z1

    n = len(rows)
    s00 = r0.T @ r0 / n
    s11 = r1.T @ r1 / n
    s01 = r0.T @ r1 / n

    lams, degenerate = _canonical_eigenvalues(s00, s11, s01, k)

    trace = np.empty(k)
    log_terms = np.log(1.0 - lams)
    for r in range(k):
        trace[r] = -n_eff * float(np.sum(log_terms[r:]))

    cvs: list[dict[str, float] | None] = []
    verdicts: list[str | None] = []
    level_key = {0.10: "90%", 0.05: "95%", 0.01: "99%"}.get(round(significance, 4))
    if level_key is None:
        raise ValueError("significance must be one of 0.10, 0.05, 0.01")
    for r in range(k):
        dim = k - r
        row = TRACE_CRITICAL_VALUES[det].get(dim)
        if row is None:
            cvs.append(None)
            verdicts.append(None)
        else:
            table = dict(zip(_CV_LEVELS, row))
            cvs.append(table)
            verdicts.append("reject" if trace[r] > table[level_key]
                            else "fail-to-reject")
    return JohansenResult(tuple(names), p, det, n_eff, lams, trace,
                          tuple(cvs), tuple(verdicts), significance,
                          degenerate)


def _canonical_eigenvalues(s00, s11, s01, k):
    """Largest k eigenvalues of the reduced-rank problem, in [0, 1).

    Rank-deficient moment matrices signal exact linear relations among the
    levels; those directions are trivially cointegrating, so each lost
    dimension contributes an eigenvalue pinned just below 1 and the result is
    flagged degenerate.
    """
    cap = 1.0 - 1e-12
    mu1, v1 = np.linalg.eigh(s11)
    tol1 = max(mu1.max(), 0.0) * 1e-10
    keep1 = mu1 > tol1
    deficient = int((~keep1).sum())
    if not keep1.any():
        raise SingularMomentMatrix("levels moment matrix is zero")

    mu0, v0 = np.linalg.eigh(s00)
    tol0 = max(mu0.max(), 0.0) * 1e-10
    keep0 = mu0 > tol0
    if not keep0.any():
        raise SingularMomentMatrix("difference moment matrix is zero")
    s00_pinv = (v0[:, keep0] / mu0[keep0]) @ v0[:, keep0].T

    w = v1[:, keep1] / np.sqrt(mu1[keep1])      # whitener of s11 range space
    core = w.T @ s01.T @ s00_pinv @ s01 @ w
    lams = np.linalg.eigvalsh((core + core.T) / 2.0)
    lams = np.clip(lams, 0.0, cap)

    lams = np.sort(lams)[::-1]
    if deficient:
        lams = np.concatenate([np.full(deficient, cap), lams])
    lams = lams[:k]
    if len(lams) < k:
        lams = np.concatenate([lams, np.zeros(k - len(lams))])
    return lams, deficient > 0


# ----------------------------------------------------------------------
# Pairwise grid
# ----------------------------------------------------------------------

STAR_BY_LEVEL = (("99%", "***"), ("95%", "**"), ("90%", "*"))


@dataclass(frozen=True)
class PairResult:
    """Rank-0 trace summary for one variable pair."""

    var_a: str
    var_b: str
    p: int
    trace_r0: float
    critical_values: dict[str, float]
    stars: str          # '' when not significant at 10%
    degenerate: bool

    @property
    def significant(self) -> bool:
        return bool(self.stars)

    def cell(self) -> str:
        """Table cell: e.g. '18.85*', or '-' when not significant."""
        if self.degenerate:
            return f"{self.trace_r0:.2f}!collinear"
        return f"{self.trace_r0:.2f}{self.stars}" if self.stars else "-"


def stars_for(trace_r0: float, cvs: dict[str, float]) -> str:
    for level, mark in STAR_BY_LEVEL:
        if trace_r0 > cvs[level]:
            return mark
    return ""


def pairwise_grid(panel, entity: str, variables=None, p: int | None = None,
                  det: str = "restricted-constant", p_max: int = 4) -> list[PairResult]:
    """Rank-0 trace results for every unordered variable pair of one entity.

    When ``p`` is None the lag order of each pair comes from the information
    criteria of its levels VAR (SC tie-break).
    """
    names = list(variables) if variables is not None else panel.variable_names()
    out: list[PairResult] = []
    for a_ix in range(len(names)):
        for b_ix in range(a_ix + 1, len(names)):
            a, b = names[a_ix], names[b_ix]
            block = panel.slice_entity(entity, [a, b])
            if p is None:
                pair_p = select_lag(block, p_max=_feasible_pmax(block, p_max)).chosen
            else:
                pair_p = p
            res = johansen_trace(block, pair_p, det)
            cvs = res.critical_values[0]
            out.append(PairResult(a, b, pair_p, float(res.trace_statistics[0]),
                                  cvs, stars_for(float(res.trace_statistics[0]), cvs),
                                  res.degenerate))
    return out


def _feasible_pmax(block, p_max: int) -> int:
    # keep the selection sample estimable: T - p > k*p + 1
    T, k = block.values.shape
    best = 1
    for p in range(1, p_max + 1):
        if T - p > k * p + 1 + 2:
            best = p
    return best
