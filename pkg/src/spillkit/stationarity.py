"""Unit-root and stationarity tests with bracketed p-values.

The ADF statistic is the t-ratio on the lagged level in the augmented
regression; the KPSS statistic is the LM statistic with a Bartlett-kernel
long-run variance.  p-values are reported as brackets between tabulated
critical values rather than as pseudo-exact numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import IncompleteSeries, SeriesTooShort, SingularRegression
from .panel import Series


@dataclass(frozen=True)
class TestReport:
    """Outcome of a single hypothesis test.

    ``p_bracket`` is ``(lo, hi]`` between tabulated levels, or an exact value
    when the sampling distribution is known (then ``lo == hi``).  ``verdict``
    is 'reject' or 'fail-to-reject' at ``significance``.
    """

    test: str
    statistic: float
    lag_order: int
    regression_form: str
    p_bracket: tuple[float, float]
    critical_values: dict[str, float]
    significance: float
    verdict: str

    __test__ = False  # keep pytest from collecting this as a test class

    @property
    def reject(self) -> bool:
        return self.verdict == "reject"

    @property
    def p_upper(self) -> float:
        return self.p_bracket[1]

    def to_dict(self) -> dict:
        return {
            "test": self.test,
            "statistic": self.statistic,
            "lag_order": self.lag_order,
            "regression_form": self.regression_form,
            "p_bracket": list(self.p_bracket),
            "critical_values": dict(self.critical_values),
            "significance": self.significance,
            "verdict": self.verdict,
        }


# MacKinnon (2010) response-surface coefficients for the ADF t distribution,
# single series: cv = b0 + b1/T + b2/T^2 + b3/T^3.
_ADF_RESPONSE_SURFACE = {
    "constant": {
        "1%": (-3.43035, -6.5393, -16.786, -79.433),
        "5%": (-2.86154, -2.8903, -4.234, -40.040),
        "10%": (-2.56677, -1.5384, -2.809, 0.0),
    },
    "constant+trend": {
        "1%": (-3.95877, -9.0531, -28.428, -134.155),
        "5%": (-3.41049, -4.3904, -9.036, -45.374),
        "10%": (-3.12705, -2.5856, -3.925, -22.380),
    },
}

# Kwiatkowski-Phillips-Schmidt-Shin (1992), Table 1 upper-tail critical values.
_KPSS_CRITICAL = {
    "constant": {"10%": 0.347, "5%": 0.463, "1%": 0.739},
    "constant+trend": {"10%": 0.119, "5%": 0.146, "1%": 0.216},
}

_LEVELS = (("1%", 0.01), ("5%", 0.05), ("10%", 0.10))


def default_max_lag(T: int) -> int:
    """Schwert rule: floor(12 * (T/100)^0.25)."""
    return int(math.floor(12.0 * (T / 100.0) ** 0.25))


def _series_values(series) -> np.ndarray:
    if isinstance(series, Series):
        if not series.complete:
            raise IncompleteSeries("series contains missing values")
        return series.values.astype(float)
    return np.asarray(series, dtype=float).ravel()


def _bracket_lower_tail(stat: float, cvs: dict[str, float]) -> tuple[float, float]:
    """Bracket for tests that reject in the lower tail (ADF)."""
    lo = 0.0
    for name, level in _LEVELS:
        if stat < cvs[name]:
            return (lo, level)
        lo = level
    return (0.10, 1.0)


def _bracket_upper_tail(stat: float, cvs: dict[str, float]) -> tuple[float, float]:
    """Bracket for tests that reject in the upper tail (KPSS)."""
    lo = 0.0
    for name, level in _LEVELS:
        if stat > cvs[name]:
            return (lo, level)
        lo = level
    return (0.10, 1.0)


def adf_test(series, max_lag: int | None = None, form: str = "constant",
             lag: int | None = None, significance: float = 0.05) -> TestReport:
    """Augmented Dickey-Fuller test (null: unit root).

    The augmentation lag is chosen by AIC up to ``max_lag`` unless ``lag``
    pins it; the reported statistic comes from a refit on the longest sample
    the chosen lag allows.
    """
    y = _series_values(series)
    T = len(y)
    if form not in _ADF_RESPONSE_SURFACE:
        raise ValueError("form must be 'constant' or 'constant+trend'")
    if max_lag is None:
        if lag is None:
            d = 1 if form == "constant" else 2
            # keep the common selection sample estimable for every lag
            max_lag = max(0, min(default_max_lag(T), (T - 4 - d) // 2))
        else:
            max_lag = lag
    if T < max_lag + 10:
        raise SeriesTooShort(f"need at least max_lag + 10 = {max_lag + 10} obs, got {T}")

    if lag is None:
        chosen, _ = _adf_select_lag(y, max_lag, form)
    else:
        chosen = lag
    stat, nobs = _adf_stat(y, chosen, form)

    cvs = {name: _adf_cv(name, form, nobs) for name, _ in _LEVELS}
    bracket = _bracket_lower_tail(stat, cvs)
    verdict = "reject" if stat < _adf_cv_at(significance, form, nobs) else "fail-to-reject"
    return TestReport("adf", stat, chosen, form, bracket, cvs, significance, verdict)


def _adf_design(y: np.ndarray, p: int, form: str, start: int):
    dy = np.diff(y)
    rows = np.arange(start, len(dy))
    cols = [y[rows]]  # lagged level y_{t-1}
    for i in range(1, p + 1):
        cols.append(dy[rows - i])
    cols.append(np.ones(len(rows)))
    if form == "constant+trend":
        cols.append(rows.astype(float) + 1.0)
    X = np.column_stack(cols)
    return X, dy[rows]


def _adf_regress(y: np.ndarray, p: int, form: str, start: int):
    X, dyt = _adf_design(y, p, form, start)
    n, k = X.shape
    if n <= k:
        raise SeriesTooShort("not enough observations for the augmented regression")
    xtx = X.T @ X
    try:
        xtx_inv = np.linalg.inv(xtx)
    except np.linalg.LinAlgError as exc:
        raise SingularRegression("augmented regression is singular") from exc
    beta = xtx_inv @ (X.T @ dyt)
    resid = dyt - X @ beta
    rss = float(resid @ resid)
    if rss <= 0 or n - k <= 0:
        raise SingularRegression("degenerate augmented regression")
    sigma2 = rss / (n - k)
    se0 = math.sqrt(sigma2 * xtx_inv[0, 0])
    tstat = float(beta[0] / se0)
    return tstat, rss, n, k


def _adf_select_lag(y: np.ndarray, max_lag: int, form: str) -> tuple[int, float]:
    """AIC over 0..max_lag on a common estimation sample."""
    best = (None, math.inf)
    for p in range(0, max_lag + 1):
        _, rss, n, k = _adf_regress(y, p, form, start=max_lag)
        aic = n * math.log(rss / n) + 2 * k
        if aic < best[1]:
            best = (p, aic)
    return best


def _adf_stat(y: np.ndarray, p: int, form: str) -> tuple[float, int]:
    tstat, _, n, _ = _adf_regress(y, p, form, start=p)
    return tstat, n


def _adf_cv(name: str, form: str, nobs: int) -> float:
    b0, b1, b2, b3 = _ADF_RESPONSE_SURFACE[form][name]
    return b0 + b1 / nobs + b2 / nobs**2 + b3 / nobs**3


def _adf_cv_at(significance: float, form: str, nobs: int) -> float:
    name = {0.01: "1%", 0.05: "5%", 0.10: "10%"}.get(round(significance, 4))
    if name is None:
        raise ValueError("significance must be one of 0.01, 0.05, 0.10")
    return _adf_cv(name, form, nobs)


def kpss_test(series, form: str = "constant", bandwidth="short",
              significance: float = 0.05) -> TestReport:
    """KPSS stationarity test (null: stationary; reject means non-stationary).

    ``bandwidth`` picks the Bartlett-kernel truncation: 'short' is the
    int(4 * (T/100)^0.25) rule, 'nw-auto' (alias 'auto') the Newey-West
    plug-in, or pass an integer.  The short rule is the default because the
    plug-in loses too much power against unit roots at annual sample sizes.
    """
    y = _series_values(series)
    T = len(y)
    if T < 10:
        raise SeriesTooShort(f"need at least 10 observations, got {T}")
    if form not in _KPSS_CRITICAL:
        raise ValueError("form must be 'constant' or 'constant+trend'")

    if form == "constant":
        e = y - y.mean()
    else:
        t = np.arange(1, T + 1, dtype=float)
        X = np.column_stack([np.ones(T), t])
        e = y - X @ np.linalg.lstsq(X, y, rcond=None)[0]

    if bandwidth == "short":
        lags = int(4.0 * (T / 100.0) ** 0.25)
    elif bandwidth in ("auto", "nw-auto"):
        lags = _newey_west_bandwidth(e)
    else:
        lags = int(bandwidth)
    lags = min(max(lags, 0), T - 1)

    s2 = float(e @ e) / T
    for j in range(1, lags + 1):
        gamma = float(e[j:] @ e[:-j]) / T
        s2 += 2.0 * (1.0 - j / (lags + 1.0)) * gamma
    partial = np.cumsum(e)
    stat = float(partial @ partial) / (T**2 * s2)

    cvs = dict(_KPSS_CRITICAL[form])
    bracket = _bracket_upper_tail(stat, cvs)
    name = {0.01: "1%", 0.05: "5%", 0.10: "10%"}.get(round(significance, 4))
    if name is None:
        raise ValueError("significance must be one of 0.01, 0.05, 0.10")
    verdict = "reject" if stat > cvs[name] else "fail-to-reject"
    return TestReport("kpss", stat, lags, form, bracket, cvs, significance, verdict)


def _newey_west_bandwidth(e: np.ndarray) -> int:
    """Automatic Bartlett-kernel bandwidth (Newey-West 1994 plug-in)."""
    T = len(e)
    n = int(T ** (2.0 / 9.0))
    s0 = float(e @ e) / T
    s1 = 0.0
    for j in range(1, n + 1):
        gamma = float(e[j:] @ e[:-j]) / T
        s0 += 2.0 * gamma
        s1 += 2.0 * j * gamma
    if s0 <= 0:
        return 0
    gamma_hat = 1.1447 * abs(s1 / s0) ** (2.0 / 3.0)
    return int(gamma_hat * T ** (1.0 / 3.0))


# ----------------------------------------------------------------------
# Combined verdict
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class StationarityVerdict:
    """Joint reading of an ADF and a KPSS report on the same series.

    ``combined`` is 'S' when both tests point to stationarity, 'N' when both
    point to non-stationarity, and 'trend-stationary' when they disagree.
    ``star`` reflects the tighter of the two p-brackets on the scale
    none/·/*/** (p <= 0.1 / 0.05 / 0.01); the 0.005 grade ('***') would need
    a 0.5% critical table, which is not tabulated here.
    """

    adf: TestReport
    kpss: TestReport
    combined: str
    star: str


_STAR_SCALE = (("**", 0.01), ("*", 0.05), ("·", 0.10))


def classify(adf: TestReport, kpss: TestReport) -> StationarityVerdict:
    """Combine the two tests: agreement gives N or S, disagreement gives
    trend-stationary."""
    adf_stationary = adf.reject           # ADF null is a unit root
    kpss_stationary = not kpss.reject     # KPSS null is stationarity
    if adf_stationary and kpss_stationary:
        combined = "S"
    elif not adf_stationary and not kpss_stationary:
        combined = "N"
    else:
        combined = "trend-stationary"

    p_upper = min(adf.p_upper, kpss.p_upper)
    star = "none"
    for mark, level in _STAR_SCALE:
        if p_upper <= level:
            star = mark
            break
    return StationarityVerdict(adf, kpss, combined, star)


def verdict_label(v: StationarityVerdict) -> str:
    """Short grid label: N/S/T plus the star marker."""
    base = {"N": "N", "S": "S", "trend-stationary": "T"}[v.combined]
    return base + ("" if v.star == "none" else v.star)
