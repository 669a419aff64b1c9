"""Batch pipeline: stationarity -> rolling OLS -> VAR/Granger/Johansen ->
quantile-VAR connectedness, with per-stage outputs and a machine-readable run
report.

Outputs are deterministic for a pinned config and input: no timestamps are
written, JSON keys are sorted, and every file is listed with its SHA-256 in
``run_report.json`` together with the config hash.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from . import report as rpt
from .cointegration import pairwise_grid
from .connectedness import (
    connectedness_report,
    fit_qvar,
    gfevd,
    npdc_node_link_json,
    npdc_to_dot,
    quantile_sweep,
    rolling_connectedness,
)
from .errors import SpillkitError
from .panel import CsvSchema, describe, difference, load_csv, log_transform
from .regression import ModelSpec, rolling_table
from .stationarity import adf_test, classify, kpss_test
from .varmodel import fit_var, granger_test, jarque_bera, model_rms, select_lag

DEFAULT_CONFIG = {
    "input": {
        "path": "",
        "schema": {"layout": "long", "entity": "entity", "year": "year",
                   "variables": [], "wide_sep": ":"},
    },
    "transforms": {"log_variables": [], "difference": 0},
    "stationarity": {"form": "constant", "max_lag": None,
                     "kpss_bandwidth": "short", "significance": 0.05},
    "rolling": {
        "models": {
            "RQ1": {"dependent": "fdi", "regressors": ["trd", "ifr"],
                    "windows": [4, 5, 6, 7, 8]},
            "RQ2": {"dependent": "inv", "regressors": ["trd", "ifr"],
                    "windows": [4, 5, 6, 7, 8]},
            "RQ3": {"dependent": "iep", "regressors": ["fdi"],
                    "windows": [3, 4, 5, 6, 7]},
        },
    },
    # form 'auto' fits levels, and differences as well when the stationarity
    # verdicts disagree across cells (the safest-bet rule)
    "var": {"form": "auto", "p": None, "p_max": 2, "deterministic": "const"},
    "johansen": {"det": "restricted-constant", "p": None, "p_max": 2},
    "connectedness": {"variables": ["iep", "fdi"],
                      "table_thetas": [0.1, 0.25, 0.5],
                      "theta_grid": None,  # None -> 0.05..0.95 step 0.05
                      "horizon": 10, "p": 1,
                      "window": None},  # set for per-window over-time reports
    "output": {"formats": ["csv", "json"], "dot": True},
}


def _merge(base: dict, override: dict) -> dict:
    out = {}
    for key, val in base.items():
        if key in override and isinstance(val, dict) and isinstance(override[key], dict):
            out[key] = _merge(val, override[key])
        elif key in override:
            out[key] = override[key]
        else:
            out[key] = val
    for key in override:
        if key not in base:
            out[key] = override[key]
    return out


@dataclass
class AnalysisConfig:
    """Fully resolved pipeline configuration (defaults expanded)."""

    settings: dict = field(default_factory=lambda: json.loads(json.dumps(DEFAULT_CONFIG)))

    @classmethod
    def from_dict(cls, overrides: dict) -> "AnalysisConfig":
        return cls(_merge(DEFAULT_CONFIG, overrides))

    @classmethod
    def from_file(cls, path) -> "AnalysisConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_json(self) -> str:
        return json.dumps(self.settings, indent=2, sort_keys=True) + "\n"

    def hash(self) -> str:
        canonical = json.dumps(self.settings, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]

    def __getitem__(self, key):
        return self.settings[key]


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class _Run:
    """Collects per-stage status and written files for the run report."""

    def __init__(self, out_dir: Path, config: AnalysisConfig):
        self.out_dir = out_dir
        self.config = config
        self.stages: list[dict] = []
        self.files: list[str] = []

    def write_text(self, name: str, text: str) -> None:
        path = self.out_dir / name
        path.write_text(text, encoding="utf-8")
        self.files.append(name)

    def write_frame(self, name: str, frame: pd.DataFrame, index: bool) -> None:
        path = self.out_dir / name
        frame.to_csv(path, index=index)
        self.files.append(name)

    def write_json(self, name: str, obj) -> None:
        self.write_text(name, json.dumps(obj, indent=2, sort_keys=True,
                                         default=_jsonify) + "\n")

    def stage(self, name: str, fn) -> bool:
        try:
            fn()
            self.stages.append({"stage": name, "status": "ok", "error": None})
            return True
        except SpillkitError as exc:
            self.stages.append({"stage": name, "status": "error",
                                "error": f"{type(exc).__name__}: {exc}"})
            return False

    def finish(self) -> dict:
        report = {
            "config_hash": self.config.hash(),
            "stages": self.stages,
            "files": {name: _sha256(self.out_dir / name)
                      for name in sorted(self.files)},
            "ok": all(s["status"] == "ok" for s in self.stages),
        }
        (self.out_dir / "run_report.json").write_text(
            json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return report


def _jsonify(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj)}")


def _resolve_var_forms(form: str, verdicts) -> list[str]:
    """'auto' runs levels, plus differences when verdicts are mixed."""
    if form in ("levels", "differences"):
        return [form]
    if form == "both":
        return ["levels", "differences"]
    if form != "auto":
        raise ValueError(f"unknown VAR form {form!r}")
    if verdicts:
        combined = {v.combined for v in verdicts.values()}
        if len(combined) > 1:
            return ["levels", "differences"]
    return ["levels"]


def run_pipeline(config: AnalysisConfig, out_dir) -> dict:
    """Execute the full workflow; later stages still run when one fails."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    run = _Run(out_dir, config)
    run.write_text("config.json", config.to_json())
    run.files.remove("config.json")  # not hashed: it defines the hash inputs

    state: dict = {}

    def load_stage():
        settings = config["input"]
        schema = CsvSchema.from_dict(settings["schema"])
        panel = load_csv(settings["path"], schema)
        tr = config["transforms"]
        if tr.get("log_variables"):
            panel = log_transform(panel, tr["log_variables"])
        for _ in range(int(tr.get("difference", 0) or 0)):
            panel = difference(panel, 1)
        state["panel"] = panel

    if not run.stage("load", load_stage):
        return run.finish()

    panel = state["panel"]
    variables = panel.variable_names()

    def describe_stage():
        stats = describe(panel)
        pooled = pd.DataFrame({var: st.to_dict() for var, st in stats["pooled"].items()})
        run.write_frame("descriptives_pooled.csv", pooled, index=True)
        run.write_json("descriptives.json", {
            "metadata": stats["metadata"],
            "pooled": {var: st.to_dict() for var, st in stats["pooled"].items()},
            "per_series": {f"{e}/{v}": st.to_dict()
                           for (e, v), st in stats["per_series"].items()},
        })

    run.stage("describe", describe_stage)

    def stationarity_stage():
        cfg = config["stationarity"]
        verdicts = {}
        for ent in panel.entities:
            for var in variables:
                series = panel.series(ent, var)
                adf = adf_test(series, max_lag=cfg["max_lag"], form=cfg["form"],
                               significance=cfg["significance"])
                kpss = kpss_test(series, form=cfg["form"],
                                 bandwidth=cfg["kpss_bandwidth"],
                                 significance=cfg["significance"])
                verdicts[(ent, var)] = classify(adf, kpss)
        state["verdicts"] = verdicts
        grid = rpt.stationarity_grid(verdicts, panel.entities, variables)
        run.write_frame("stationarity_grid.csv", grid, index=True)
        run.write_json("stationarity_grid.json",
                       {ent: grid.loc[ent].to_dict() for ent in grid.index})
        run.write_frame("stationarity.csv", rpt.stationarity_tidy(verdicts),
                        index=False)

    run.stage("stationarity", stationarity_stage)

    def rolling_stage():
        for name, spec in config["rolling"]["models"].items():
            model = ModelSpec(name, spec["dependent"], tuple(spec["regressors"]))
            missing = [v for v in (model.dependent, *model.regressors)
                       if v not in variables]
            if missing:
                continue
            results = rolling_table(panel, model, spec["windows"])
            grid = rpt.rolling_grid(results)
            run.write_frame(f"rolling_{name.lower()}.csv", grid, index=False)
            run.write_json(f"rolling_{name.lower()}.json",
                           grid.set_index("entity").to_dict(orient="index"))
            run.write_text(f"rolling_{name.lower()}.txt",
                           rpt.rolling_text(results,
                                            f"{name}: {model.dependent} ~ "
                                            f"{' + '.join(model.regressors)}"))

    run.stage("rolling", rolling_stage)

    def var_stage():
        cfg = config["var"]
        forms = _resolve_var_forms(cfg["form"], state.get("verdicts"))
        summary = {}
        lag_rows = []
        tidy_frames = []
        for ent in panel.entities:
            block = panel.slice_entity(ent)
            per_form = {}
            for form in forms:
                values = block.values if form == "levels" else np.diff(
                    block.values, axis=0)
                sel = select_lag(values, p_max=cfg["p_max"],
                                 deterministic=cfg["deterministic"])
                p = cfg["p"] or sel.chosen
                fit = fit_var(values, p, form=form,
                              deterministic=cfg["deterministic"])
                rms = model_rms(fit, values)
                _, jb = jarque_bera(fit.residuals)
                per_form[form] = {
                    "p": p,
                    "lag_selection": {"chosen": sel.chosen, "rule": sel.rule,
                                      "criteria": {str(k): v
                                                   for k, v in sel.criteria.items()}},
                    "spectral_radius": fit.spectral_radius,
                    "rms": {k: v.rms for k, v in rms.items()},
                    "jarque_bera": jb.to_dict(),
                    "intercept": fit.intercept.tolist(),
                    "lag_matrices": [m.tolist() for m in fit.lag_matrices],
                    "sigma": fit.sigma.tolist(),
                }
                lag_rows.append({"entity": ent, "form": form,
                                 "chosen": sel.chosen, "rule": sel.rule,
                                 **{f"{c}_argmin": sel.argmin(c)
                                    for c in ("AIC", "HQ", "SC", "FPE")}})
            summary[ent] = per_form
            # Granger grids come from the levels system (first form)
            p_granger = per_form[forms[0]]["p"]
            reports = {}
            for cause in variables:
                for effect in variables:
                    if cause != effect:
                        reports[(cause, effect)] = granger_test(
                            block, cause, effect, p_granger,
                            deterministic=cfg["deterministic"])
            run.write_frame(f"granger_{ent}.csv",
                            rpt.granger_grid(reports, variables), index=True)
            tidy_frames.append(rpt.granger_tidy(reports, ent))
        run.write_json("var_summary.json", summary)
        run.write_frame("lag_selection.csv", pd.DataFrame(lag_rows), index=False)
        run.write_frame("granger.csv", pd.concat(tidy_frames, ignore_index=True),
                        index=False)

    run.stage("var", var_stage)

    def johansen_stage():
        cfg = config["johansen"]
        tidy = []
        for ent in panel.entities:
            pairs = pairwise_grid(panel, ent, variables, p=cfg["p"],
                                  det=cfg["det"], p_max=cfg["p_max"])
            run.write_frame(f"johansen_{ent}.csv",
                            rpt.johansen_grid(pairs, variables), index=True)
            tidy.append(rpt.johansen_tidy(pairs, ent))
        combined = pd.concat(tidy, ignore_index=True)
        run.write_frame("johansen.csv", combined, index=False)
        run.write_json("johansen.json", combined.to_dict(orient="records"))

    run.stage("johansen", johansen_stage)

    def connectedness_stage():
        cfg = config["connectedness"]
        for var in cfg["variables"]:
            if var not in variables:
                continue
            block = panel.slice_variable(var)
            for theta in cfg["table_thetas"]:
                tag = f"{var}_q{int(round(theta * 100)):02d}"
                fit = fit_qvar(block, cfg["p"], theta)
                table = gfevd(fit, cfg["horizon"])
                rep = connectedness_report(table)
                run.write_frame(f"connectedness_{tag}.csv",
                                rpt.connectedness_frame(rep), index=True)
                run.write_json(f"connectedness_{tag}.json", {
                    "names": list(rep.names),
                    "theta": theta,
                    "horizon": cfg["horizon"],
                    "shares": rep.shares.shares.tolist(),
                    "from_others": rep.from_others.tolist(),
                    "to_others": rep.to_others.tolist(),
                    "total_including_own": rep.total_including_own.tolist(),
                    "net": rep.net.tolist(),
                    "npdc": rep.npdc.tolist(),
                    "npdc_degree": rep.npdc_degree.tolist(),
                    "tci": rep.tci,
                })
                if config["output"].get("dot", True):
                    run.write_text(f"npdc_{tag}.dot", npdc_to_dot(rep))
                run.write_text(f"npdc_{tag}.json", npdc_node_link_json(rep))
            if cfg.get("window"):
                for theta in cfg["table_thetas"]:
                    tag = f"{var}_q{int(round(theta * 100)):02d}"
                    windows = rolling_connectedness(
                        block, cfg["p"], cfg["horizon"], theta, cfg["window"])
                    run.write_frame(f"npdc_windows_{tag}.csv",
                                    rpt.windowed_frame(windows), index=False)
            grid = cfg["theta_grid"]
            sweep = quantile_sweep(block, cfg["p"], cfg["horizon"], grid)
            run.write_frame(f"sweep_{var}_from.csv",
                            rpt.sweep_frame(sweep, "from"), index=False)
            run.write_frame(f"sweep_{var}_to.csv",
                            rpt.sweep_frame(sweep, "to"), index=False)

    run.stage("connectedness", connectedness_stage)
    return run.finish()
