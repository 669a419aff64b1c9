"""Multi-country annual panel: data model, CSV ingestion, transforms, descriptives.

A :class:`Panel` holds one :class:`Series` per (entity, variable) cell, all
aligned on a single strictly increasing annual year index.  Panels are
immutable; transforms return new panels and append a replayable record to
``transform_log``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from .errors import (
    DuplicateEntityYear,
    EmptyPanel,
    IncompleteSeries,
    InsufficientData,
    MissingColumn,
    NonPositiveValue,
    SeriesTooShort,
)


class RoleTag(Enum):
    """Economic role of a panel variable."""

    FDI = "fdi"  # net FDI inflows
    TRD = "trd"  # technology readiness (ICT intermediate-import share)
    INV = "inv"  # innovation (patent applications)
    IFR = "ifr"  # infrastructure (industry value added)
    IEP = "iep"  # intermediate imports
    OTHER = "other"


@dataclass(frozen=True)
class VariableRole:
    """A named variable plus its role tag.

    ``name`` is the series/column name used throughout; two variables in the
    same panel must not share a name.
    """

    tag: RoleTag
    name: str

    @classmethod
    def of(cls, name: str) -> "VariableRole":
        """Build a role from a name, recognising the canonical tags."""
        try:
            return cls(RoleTag(name.lower()), name)
        except ValueError:
            return cls(RoleTag.OTHER, name)

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Series:
    """One annual series: values, integer year index and a missing mask."""

    years: np.ndarray
    values: np.ndarray
    missing: np.ndarray

    def __post_init__(self):
        years = np.asarray(self.years, dtype=int)
        values = np.asarray(self.values, dtype=float)
        missing = np.asarray(self.missing, dtype=bool)
        object.__setattr__(self, "years", years)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "missing", missing)
        if not (len(years) == len(values) == len(missing)):
            raise ValueError("years, values and missing must have equal length")
        if len(years) > 1 and not np.all(np.diff(years) == 1):
            raise ValueError("year index must be strictly increasing with unit spacing")
        if not np.all(np.isfinite(values[~missing])):
            raise ValueError("non-missing values must be finite")

    def __len__(self) -> int:
        return len(self.years)

    @property
    def complete(self) -> bool:
        return not self.missing.any()

    def observed(self) -> np.ndarray:
        """Non-missing values in year order."""
        return self.values[~self.missing]


@dataclass(frozen=True)
class Panel:
    """Aligned collection of series keyed by (entity, variable name)."""

    entities: tuple[str, ...]
    variables: tuple[VariableRole, ...]
    data: Mapping[tuple[str, str], Series]
    transform_log: tuple[dict, ...] = ()

    def __post_init__(self):
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise ValueError("variable names must be unique")
        years = self.years
        for key, series in self.data.items():
            if not np.array_equal(series.years, years):
                raise ValueError(f"series {key} is not aligned on the panel year index")

    @property
    def years(self) -> np.ndarray:
        first = next(iter(self.data.values()))
        return first.years

    @property
    def n_years(self) -> int:
        return len(self.years)

    def variable_names(self) -> list[str]:
        return [v.name for v in self.variables]

    def role(self, name: str) -> VariableRole:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)

    def series(self, entity: str, variable: str) -> Series:
        return self.data[(entity, variable)]

    def slice_entity(self, entity: str, variables: Sequence[str] | None = None,
                     require_complete: bool = True) -> "PanelSlice":
        """All (or selected) variables of one entity as an aligned T x k block."""
        names = list(variables) if variables is not None else self.variable_names()
        cols = [self.series(entity, v) for v in names]
        return _make_slice(names, self.years, cols, require_complete,
                           what=f"entity {entity}")

    def slice_variable(self, variable: str, entities: Sequence[str] | None = None,
                       require_complete: bool = True) -> "PanelSlice":
        """One variable across all (or selected) entities as a T x k block."""
        ents = list(entities) if entities is not None else list(self.entities)
        cols = [self.series(e, variable) for e in ents]
        return _make_slice(ents, self.years, cols, require_complete,
                           what=f"variable {variable}")

    def with_log(self, record: dict, data: Mapping[tuple[str, str], Series],
                 variables: tuple[VariableRole, ...] | None = None) -> "Panel":
        return Panel(
            entities=self.entities,
            variables=variables if variables is not None else self.variables,
            data=data,
            transform_log=self.transform_log + (record,),
        )


@dataclass(frozen=True)
class PanelSlice:
    """A complete-case multivariate block: column names plus a T x k matrix."""

    names: tuple[str, ...]
    years: np.ndarray
    values: np.ndarray  # shape (T, k)

    @property
    def k(self) -> int:
        return self.values.shape[1]

    @property
    def nobs(self) -> int:
        return self.values.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.names.index(name)]


def _make_slice(names, years, cols, require_complete, what):
    missing = np.column_stack([s.missing for s in cols])
    if require_complete and missing.any():
        bad = int(missing.sum())
        raise IncompleteSeries(
            f"{what}: {bad} missing cell(s) in the requested window; "
            "complete cases are required (no imputation is performed)"
        )
    values = np.column_stack([s.values for s in cols])
    return PanelSlice(names=tuple(names), years=np.asarray(years, dtype=int),
                      values=values)


# ----------------------------------------------------------------------
# CSV ingestion
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class CsvSchema:
    """Column mapping for panel CSV files.

    ``layout='long'`` expects one row per (entity, year) with one column per
    variable.  ``layout='wide'`` expects one row per year with columns named
    ``<entity><sep><variable>``.
    """

    entity: str = "entity"
    year: str = "year"
    variables: tuple[str, ...] = ()
    layout: str = "long"
    wide_sep: str = ":"

    @staticmethod
    def from_dict(d: Mapping) -> "CsvSchema":
        return CsvSchema(
            entity=d.get("entity", "entity"),
            year=d.get("year", "year"),
            variables=tuple(d.get("variables", ())),
            layout=d.get("layout", "long"),
            wide_sep=d.get("wide_sep", ":"),
        )

    def to_dict(self) -> dict:
        return {
            "entity": self.entity,
            "year": self.year,
            "variables": list(self.variables),
            "layout": self.layout,
            "wide_sep": self.wide_sep,
        }


def load_csv(path, schema: CsvSchema) -> Panel:
    """Read a panel CSV and align every series on a common annual index.

    Unparseable numeric cells become missing values; gaps in an entity's year
    coverage are padded as missing so all series share one index.
    """
    raw = pd.read_csv(path, dtype=str, keep_default_na=False, na_values=[])
    raw.columns = [c.strip() for c in raw.columns]

    if schema.layout == "wide":
        frame = _wide_to_long(raw, schema)
    else:
        frame = _check_long(raw, schema)

    var_names = list(schema.variables) if schema.variables else [
        c for c in frame.columns if c not in (schema.entity, schema.year)
    ]
    if not var_names:
        raise MissingColumn("schema names no variable columns")

    years_num = pd.to_numeric(frame[schema.year], errors="coerce")
    if years_num.isna().any():
        raise EmptyPanel("year column contains unparseable entries")
    frame = frame.assign(**{schema.year: years_num.astype(int)})

    dup = frame.duplicated(subset=[schema.entity, schema.year])
    if dup.any():
        first = frame.loc[dup, [schema.entity, schema.year]].iloc[0]
        raise DuplicateEntityYear(
            f"duplicate row for ({first[schema.entity]}, {first[schema.year]})"
        )
    if frame.empty:
        raise EmptyPanel("no data rows in input")

    entities = tuple(sorted(frame[schema.entity].unique()))
    y0, y1 = int(frame[schema.year].min()), int(frame[schema.year].max())
    years = np.arange(y0, y1 + 1)

    data: dict[tuple[str, str], Series] = {}
    for ent in entities:
        block = frame[frame[schema.entity] == ent].set_index(schema.year)
        block = block.reindex(years)
        for name in var_names:
            if name not in block.columns:
                raise MissingColumn(f"variable column '{name}' not in file")
            vals = pd.to_numeric(block[name], errors="coerce").to_numpy(dtype=float)
            miss = ~np.isfinite(vals)
            vals = np.where(miss, np.nan, vals)
            data[(ent, name)] = Series(years=years, values=vals, missing=miss)

    variables = tuple(VariableRole.of(n) for n in var_names)
    return Panel(entities=entities, variables=variables, data=data,
                 transform_log=())


def _check_long(frame: pd.DataFrame, schema: CsvSchema) -> pd.DataFrame:
    for col in (schema.entity, schema.year):
        if col not in frame.columns:
            raise MissingColumn(f"column '{col}' not in file")
    for name in schema.variables:
        if name not in frame.columns:
            raise MissingColumn(f"variable column '{name}' not in file")
    return frame


def _wide_to_long(frame: pd.DataFrame, schema: CsvSchema) -> pd.DataFrame:
    if schema.year not in frame.columns:
        raise MissingColumn(f"column '{schema.year}' not in file")
    sep = schema.wide_sep
    cells = [c for c in frame.columns if sep in c]
    if not cells:
        raise MissingColumn(f"no '<entity>{sep}<variable>' columns in wide file")
    rows = []
    for _, row in frame.iterrows():
        per_entity: dict[str, dict] = {}
        for col in cells:
            ent, var = col.split(sep, 1)
            per_entity.setdefault(ent, {})[var] = row[col]
        for ent, vals in sorted(per_entity.items()):
            rows.append({schema.entity: ent, schema.year: row[schema.year], **vals})
    return pd.DataFrame(rows)


# ----------------------------------------------------------------------
# Transforms
# ----------------------------------------------------------------------


def log_transform(panel: Panel, variables: Iterable[str]) -> Panel:
    """Natural log of the selected variables.

    Refuses on any non-positive non-missing value rather than shifting the
    data silently; see :func:`offset_transform` for the explicit opt-in.
    """
    names = list(variables)
    data = dict(panel.data)
    for ent in panel.entities:
        for name in names:
            s = panel.series(ent, name)
            vals = s.values
            bad = (~s.missing) & ~(vals > 0)
            if bad.any():
                i = int(np.argmax(bad))
                raise NonPositiveValue(ent, name, int(s.years[i]), float(vals[i]))
            out = np.where(s.missing, np.nan, np.log(np.where(s.missing, 1.0, vals)))
            data[(ent, name)] = Series(s.years, out, s.missing)
    return panel.with_log({"op": "log", "variables": sorted(names)}, data)


def offset_transform(panel: Panel, variables: Iterable[str], offset: float) -> Panel:
    """Add a documented constant offset (recorded in the transform log)."""
    names = list(variables)
    data = dict(panel.data)
    for ent in panel.entities:
        for name in names:
            s = panel.series(ent, name)
            out = np.where(s.missing, np.nan, s.values + offset)
            data[(ent, name)] = Series(s.years, out, s.missing)
    return panel.with_log(
        {"op": "offset", "variables": sorted(names), "offset": float(offset)}, data
    )


def difference(panel: Panel, order: int = 1) -> Panel:
    """Order-th difference of every series; the year index shifts forward."""
    if order < 1:
        raise ValueError("order must be >= 1")
    if panel.n_years <= order:
        raise SeriesTooShort(
            f"series length {panel.n_years} does not exceed difference order {order}"
        )
    years = panel.years[order:]
    data = {}
    for key, s in panel.data.items():
        vals = s.values.copy()
        miss = s.missing.copy()
        for _ in range(order):
            new_miss = miss[1:] | miss[:-1]
            vals = vals[1:] - vals[:-1]
            miss = new_miss
        vals = np.where(miss, np.nan, vals)
        data[key] = Series(years, vals, miss)
    out = Panel(entities=panel.entities, variables=panel.variables, data=data,
                transform_log=panel.transform_log + ({"op": "difference", "order": int(order)},))
    return out


def replay(raw: Panel, transform_log: Sequence[dict]) -> Panel:
    """Re-apply a transform log to a raw panel; reproduces the transformed panel."""
    panel = raw
    for record in transform_log:
        op = record["op"]
        if op == "log":
            panel = log_transform(panel, record["variables"])
        elif op == "offset":
            panel = offset_transform(panel, record["variables"], record["offset"])
        elif op == "difference":
            panel = difference(panel, record["order"])
        else:
            raise ValueError(f"unknown transform op {op!r}")
    return panel


# ----------------------------------------------------------------------
# Descriptive statistics
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class DescriptiveStats:
    """Summary statistics for one cell or pooled column.

    Skew is the adjusted Fisher-Pearson coefficient (G1) and kurtosis is
    adjusted excess kurtosis (G2, normal = 0); both are undefined for
    constant series and flagged via ``degenerate``.
    """

    n: int
    mean: float
    sd: float
    median: float
    min: float
    max: float
    range: float
    skew: float
    excess_kurtosis: float
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "mean": self.mean,
            "sd": self.sd,
            "median": self.median,
            "min": self.min,
            "max": self.max,
            "range": self.range,
            "skew": self.skew,
            "excess_kurtosis": self.excess_kurtosis,
            "degenerate": self.degenerate,
        }


#: recorded next to describe() output so table consumers know the conventions
DESCRIBE_METADATA = {
    "sd": "sample standard deviation (n-1 divisor)",
    "skew": "adjusted Fisher-Pearson skewness (G1)",
    "excess_kurtosis": "adjusted excess kurtosis (G2, normal = 0)",
}


def _stats_from_values(x: np.ndarray) -> DescriptiveStats:
    n = len(x)
    if n < 2:
        raise InsufficientData("describe requires >= 2 non-missing observations")
    mean = float(np.mean(x))
    sd = float(np.std(x, ddof=1))
    mn, mx = float(np.min(x)), float(np.max(x))
    med = float(np.median(x))
    if sd == 0.0:
        return DescriptiveStats(n, mean, 0.0, med, mn, mx, mx - mn,
                                float("nan"), float("nan"), degenerate=True)
    z = (x - mean) / sd
    skew = float(n / ((n - 1) * (n - 2)) * np.sum(z**3)) if n > 2 else float("nan")
    if n > 3:
        g2 = (n * (n + 1) / ((n - 1) * (n - 2) * (n - 3)) * np.sum(z**4)
              - 3 * (n - 1) ** 2 / ((n - 2) * (n - 3)))
        kurt = float(g2)
    else:
        kurt = float("nan")
    degen = math.isnan(skew) or math.isnan(kurt)
    return DescriptiveStats(n, mean, sd, med, mn, mx, mx - mn, skew, kurt,
                            degenerate=degen)


def describe(panel: Panel) -> dict:
    """Per-(entity, variable) and per-variable pooled descriptive statistics."""
    per_series: dict[tuple[str, str], DescriptiveStats] = {}
    pooled: dict[str, DescriptiveStats] = {}
    for name in panel.variable_names():
        stacked = []
        for ent in panel.entities:
            s = panel.series(ent, name)
            obs = s.observed()
            per_series[(ent, name)] = _stats_from_values(obs)
            stacked.append(obs)
        pooled[name] = _stats_from_values(np.concatenate(stacked))
    return {"per_series": per_series, "pooled": pooled,
            "metadata": dict(DESCRIBE_METADATA)}
