"""Table shaping and fixture validation.

Builds the grid-style DataFrames the CLI writes (stationarity verdict grids,
rolling mean-R2 matrices, causality and cointegration grids, connectedness
tables with their four summary rows, quantile-sweep tables) and checks
externally supplied connectedness/sweep tables against the arithmetic
identities any valid table must satisfy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .cointegration import PairResult
from .connectedness import ConnectednessReport, SweepResult
from .errors import SchemaMismatch
from .regression import FLAG_MARKERS, RollingResult
from .stationarity import verdict_label

GRANGER_STARS = (("***", 0.01), ("**", 0.05), ("*", 0.10))


def granger_stars(p: float) -> str:
    for mark, level in GRANGER_STARS:
        if p <= level:
            return mark
    return ""


# ----------------------------------------------------------------------
# Grid builders
# ----------------------------------------------------------------------


def stationarity_grid(verdicts: dict, entities, variables) -> pd.DataFrame:
    """Entities x variables grid of combined verdict labels (e.g. 'N*')."""
    rows = {}
    for ent in entities:
        rows[ent] = {var: verdict_label(verdicts[(ent, var)]) for var in variables}
    frame = pd.DataFrame.from_dict(rows, orient="index")[list(variables)]
    frame.index.name = "entity"
    return frame


def stationarity_tidy(verdicts: dict) -> pd.DataFrame:
    """Machine-readable rows: one per (entity, variable) with both tests."""
    records = []
    for (ent, var), v in sorted(verdicts.items()):
        records.append({
            "entity": ent,
            "variable": var,
            "adf_stat": v.adf.statistic,
            "adf_lag": v.adf.lag_order,
            "adf_p_upper": v.adf.p_upper,
            "adf_verdict": v.adf.verdict,
            "kpss_stat": v.kpss.statistic,
            "kpss_bandwidth": v.kpss.lag_order,
            "kpss_p_upper": v.kpss.p_upper,
            "kpss_verdict": v.kpss.verdict,
            "combined": v.combined,
            "star": "" if v.star == "none" else v.star,
        })
    return pd.DataFrame.from_records(records)


def rolling_grid(results: dict[str, dict[int, RollingResult]]) -> pd.DataFrame:
    """Entity x window matrix of mean R2, with per-cell flag columns."""
    windows = sorted(next(iter(results.values())).keys())
    records = []
    for ent, by_window in results.items():
        row = {"entity": ent}
        for w in windows:
            res = by_window[w]
            row[f"w{w}"] = res.mean_r_squared
            row[f"w{w}_flag"] = res.flag
        records.append(row)
    return pd.DataFrame.from_records(records)


def rolling_text(results: dict[str, dict[int, RollingResult]], title: str) -> str:
    """Human-readable view with inline markers (· / * / ** by median F p)."""
    windows = sorted(next(iter(results.values())).keys())
    lines = [title, "entity".ljust(14) + "".join(f"w={w}".rjust(13) for w in windows)]
    for ent, by_window in results.items():
        cells = []
        for w in windows:
            res = by_window[w]
            cells.append(f"{res.mean_r_squared:.6f}{FLAG_MARKERS[res.flag]}".rjust(13))
        lines.append(ent.ljust(14) + "".join(cells))
    return "\n".join(lines) + "\n"


def granger_grid(reports: dict[tuple[str, str], object], variables) -> pd.DataFrame:
    """Cause x effect grid of 'stat*** (p)' cells; '-' on the diagonal."""
    grid = {}
    for cause in variables:
        row = {}
        for effect in variables:
            if cause == effect:
                row[effect] = "-"
            else:
                rep = reports[(cause, effect)]
                p = rep.p_bracket[1]
                row[effect] = f"{rep.statistic:.4f}{granger_stars(p)} ({p:.5f})"
        grid[cause] = row
    frame = pd.DataFrame.from_dict(grid, orient="index")[list(variables)]
    frame.index.name = "cause"
    return frame


def granger_tidy(reports: dict[tuple[str, str], object], entity: str) -> pd.DataFrame:
    records = []
    for (cause, effect), rep in sorted(reports.items()):
        p = rep.p_bracket[1]
        records.append({
            "entity": entity, "cause": cause, "effect": effect,
            "f_stat": rep.statistic, "p_value": p, "lag": rep.lag_order,
            "stars": granger_stars(p),
        })
    return pd.DataFrame.from_records(records)


def johansen_grid(pairs: list[PairResult], variables) -> pd.DataFrame:
    """Lower-triangular grid of rank-0 trace cells ('18.85*' or '-')."""
    cells = {(p.var_a, p.var_b): p.cell() for p in pairs}
    grid = {}
    for i, vb in enumerate(variables):
        row = {}
        for j, va in enumerate(variables):
            if j < i:
                row[va] = cells.get((va, vb), cells.get((vb, va), ""))
            else:
                row[va] = ""
        grid[vb] = row
    frame = pd.DataFrame.from_dict(grid, orient="index")[list(variables)]
    frame.index.name = "variable"
    return frame


def johansen_tidy(pairs: list[PairResult], entity: str) -> pd.DataFrame:
    records = [{
        "entity": entity, "var_a": p.var_a, "var_b": p.var_b, "lag": p.p,
        "trace_r0": p.trace_r0, "stars": p.stars,
        "significant": p.significant, "degenerate": p.degenerate,
    } for p in pairs]
    return pd.DataFrame.from_records(records)


SUMMARY_ROWS = ("TO", "TOTAL", "NET", "NPDC")


def connectedness_frame(rep: ConnectednessReport) -> pd.DataFrame:
    """The k x k share table plus FROM column and the four summary rows.

    Mirrors the fixture layout: the TO row carries the grand total in the
    FROM column.
    """
    names = list(rep.names)
    S = rep.shares.shares
    data = {}
    for i, name in enumerate(names):
        data[name] = [round(float(S[i, j]), 2) for j in range(len(names))] + \
                     [round(float(rep.from_others[i]), 2)]
    frame = pd.DataFrame.from_dict(data, orient="index",
                                   columns=names + ["FROM"], dtype=object)
    frame.loc["TO"] = [round(float(v), 2) for v in rep.to_others] + \
                      [round(float(rep.to_others.sum()), 2)]
    frame.loc["TOTAL"] = [round(float(v), 2) for v in rep.total_including_own] + [""]
    frame.loc["NET"] = [round(float(v), 2) for v in rep.net] + [""]
    frame.loc["NPDC"] = [int(v) for v in rep.npdc_degree] + [""]
    frame.index.name = "name"
    return frame


def windowed_frame(windows) -> pd.DataFrame:
    """Per-window TCI, NET and pairwise NPDC rows for over-time views."""
    records = []
    for w in windows:
        rec = {"end_index": w.end_index,
               "end_year": w.end_year if w.end_year is not None else ""}
        if w.ok:
            rep = w.report
            rec["tci"] = round(rep.tci, 4)
            for i, name in enumerate(rep.names):
                rec[f"net:{name}"] = round(float(rep.net[i]), 4)
            for i, a in enumerate(rep.names):
                for j, b in enumerate(rep.names):
                    if i < j:
                        rec[f"npdc:{a}>{b}"] = round(float(rep.npdc[i, j]), 4)
            rec["error"] = ""
        else:
            rec["error"] = w.error
        records.append(rec)
    return pd.DataFrame.from_records(records)


def sweep_frame(sweep: SweepResult, direction: str) -> pd.DataFrame:
    """Quantile rows of per-entity FROM (or TO) contributions + Total/STDEV."""
    if direction not in ("from", "to"):
        raise ValueError("direction must be 'from' or 'to'")
    records = []
    for row in sweep.rows:
        rec = {"quantile": row.theta}
        if row.ok:
            vec = row.from_others if direction == "from" else row.to_others
            for name, v in zip(sweep.names, vec):
                rec[name] = round(float(v), 2)
            rec["Total"] = round(row.total(direction), 2)
            rec["STDEV"] = round(row.stdev(direction), 2)
            rec["error"] = ""
        else:
            for name in sweep.names:
                rec[name] = np.nan
            rec["Total"] = np.nan
            rec["STDEV"] = np.nan
            rec["error"] = row.error
        records.append(rec)
    return pd.DataFrame.from_records(records)


# ----------------------------------------------------------------------
# Fixture validation
# ----------------------------------------------------------------------


@dataclass
class CheckResult:
    name: str
    tolerance: float
    max_residual: float
    passed: bool
    residuals: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "tolerance": self.tolerance,
                "max_residual": self.max_residual, "passed": self.passed,
                "residuals": {str(k): v for k, v in self.residuals.items()}}


@dataclass
class FixtureReport:
    kind: str
    checks: list[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "passed": self.passed,
                "checks": [c.to_dict() for c in self.checks]}


def _check(name, tol, residuals) -> CheckResult:
    worst = max((abs(v) for v in residuals.values()), default=0.0)
    return CheckResult(name, tol, worst, worst <= tol,
                       {k: round(v, 6) for k, v in residuals.items()})


def validate_fixture(path_or_frame, kind: str) -> FixtureReport:
    """Run the arithmetic identities of a table kind and report residuals.

    ``kind='connectedness'``: k x k shares + FROM column + TO/TOTAL/NET/NPDC
    rows.  ``kind='sweep'``: per-quantile rows with Total and STDEV columns.
    """
    if isinstance(path_or_frame, pd.DataFrame):
        frame = path_or_frame.copy()
    else:
        frame = pd.read_csv(path_or_frame, index_col=0)
    if kind == "connectedness":
        return _validate_connectedness(frame)
    if kind == "sweep":
        return _validate_sweep(frame.reset_index())
    raise SchemaMismatch(f"unknown fixture kind {kind!r}")


def _validate_connectedness(frame: pd.DataFrame) -> FixtureReport:
    if "FROM" not in frame.columns:
        raise SchemaMismatch("connectedness table needs a FROM column")
    for row in SUMMARY_ROWS:
        if row not in frame.index:
            raise SchemaMismatch(f"connectedness table needs a {row} row")
    entities = [ix for ix in frame.index if ix not in SUMMARY_ROWS]
    if sorted(entities) != sorted(c for c in frame.columns if c != "FROM"):
        raise SchemaMismatch("entity rows and columns do not match")

    S = frame.loc[entities, entities].to_numpy(dtype=float)
    own = np.diag(S)
    from_col = frame.loc[entities, "FROM"].to_numpy(dtype=float)
    to_row = frame.loc["TO", entities].to_numpy(dtype=float)
    total_row = frame.loc["TOTAL", entities].to_numpy(dtype=float)
    net_row = frame.loc["NET", entities].to_numpy(dtype=float)
    npdc_row = frame.loc["NPDC", entities].to_numpy(dtype=float)
    grand_total = float(frame.loc["TO", "FROM"])

    checks = [
        _check("row_sums_100", 0.05,
               {e: float(S[i].sum() - 100.0) for i, e in enumerate(entities)}),
        _check("own_plus_from_100", 0.05,
               {e: float(own[i] + from_col[i] - 100.0)
                for i, e in enumerate(entities)}),
        _check("from_vs_row_offdiagonal", 0.05,
               {e: float((S[i].sum() - own[i]) - from_col[i])
                for i, e in enumerate(entities)}),
        _check("to_vs_column_offdiagonal", 0.05,
               {e: float((S[:, i].sum() - own[i]) - to_row[i])
                for i, e in enumerate(entities)}),
        _check("net_equals_to_minus_from", 0.02,
               {e: float(net_row[i] - (to_row[i] - from_col[i]))
                for i, e in enumerate(entities)}),
        _check("total_equals_to_plus_own", 0.02,
               {e: float(total_row[i] - (to_row[i] + own[i]))
                for i, e in enumerate(entities)}),
        _check("grand_total", 0.1, {"TO": float(to_row.sum() - grand_total)}),
        _check("net_sums_to_zero", 0.1, {"NET": float(net_row.sum())}),
    ]

    npdc = S.T - S
    derived_degree = (npdc > 0).sum(axis=1)
    checks.append(_check("npdc_degree", 0.0,
                         {e: float(derived_degree[i] - npdc_row[i])
                          for i, e in enumerate(entities)}))
    return FixtureReport("connectedness", checks)


def _validate_sweep(frame: pd.DataFrame) -> FixtureReport:
    need = {"quantile", "Total", "STDEV"}
    if not need.issubset(frame.columns):
        raise SchemaMismatch("sweep table needs quantile, Total, STDEV columns")
    entities = [c for c in frame.columns if c not in need and c != "error"]
    if not entities:
        raise SchemaMismatch("sweep table has no entity columns")

    totals = {}
    stdevs = {}
    for _, row in frame.iterrows():
        vals = pd.to_numeric(row[entities], errors="coerce").to_numpy(dtype=float)
        q = float(row["quantile"])
        if np.isnan(vals).any():
            continue  # failed quantile rows carry no contributions to check
        totals[q] = float(vals.sum() - row["Total"])
        stdevs[q] = float(np.std(vals, ddof=1) - row["STDEV"])
    return FixtureReport("sweep", [
        _check("total_vs_sum", 0.1, totals),
        _check("stdev_recomputed", 0.02, stdevs),
    ])
