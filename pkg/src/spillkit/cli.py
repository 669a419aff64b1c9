"""Command-line front end.

Subcommands mirror the pipeline stages (describe, stationarity, rolling, var,
granger, johansen, connectedness, sweep), plus `simulate` for synthetic data,
`validate-fixture` for table consistency checks and `run` for the whole
workflow.  `run` reads a JSON config file; flags override config values,
which override defaults.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
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
from .pipeline import AnalysisConfig, run_pipeline
from .regression import RQ_MODELS, ModelSpec, rolling_table
from .stationarity import adf_test, classify, kpss_test
from .synth import ProcessSpec, example_panel, simulate, write_panel_csv
from .varmodel import fit_var, granger_test, jarque_bera, model_rms, select_lag


def bundled_example_path() -> Path:
    """Path of the packaged synthetic sample panel."""
    return Path(resources.files("spillkit").joinpath("data/example_panel.csv"))


def _schema_from_args(args) -> CsvSchema:
    return CsvSchema(entity=args.entity_col, year=args.year_col,
                     variables=tuple(args.variables or ()),
                     layout=args.layout, wide_sep=args.wide_sep)


def _load_panel(args):
    path = args.input or bundled_example_path()
    panel = load_csv(path, _schema_from_args(args))
    if getattr(args, "log_variables", None):
        panel = log_transform(panel, args.log_variables)
    for _ in range(getattr(args, "difference", 0) or 0):
        panel = difference(panel, 1)
    return panel


def _add_input_args(sub):
    sub.add_argument("--input", help="panel CSV (default: bundled sample)")
    sub.add_argument("--entity-col", default="entity")
    sub.add_argument("--year-col", default="year")
    sub.add_argument("--layout", choices=["long", "wide"], default="long")
    sub.add_argument("--wide-sep", default=":")
    sub.add_argument("--variables", nargs="*", help="variable columns (default: all)")
    sub.add_argument("--log-variables", nargs="*", default=[],
                     help="apply natural log to these variables first")
    sub.add_argument("--difference", type=int, default=0,
                     help="difference the panel this many times first")


def _out_arg(sub):
    sub.add_argument("--out", help="write CSV/JSON here instead of stdout")


def _emit(frame: pd.DataFrame, args, name: str, index: bool) -> None:
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        frame.to_csv(out / name, index=index)
        print(out / name)
    else:
        print(frame.to_string())


def _emit_text(text: str, args, name: str) -> None:
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text, encoding="utf-8")
        print(out / name)
    else:
        print(text, end="")


# ----------------------------------------------------------------------
# Subcommand handlers
# ----------------------------------------------------------------------


def cmd_describe(args) -> int:
    panel = _load_panel(args)
    stats = describe(panel)
    pooled = pd.DataFrame({v: s.to_dict() for v, s in stats["pooled"].items()})
    _emit(pooled, args, "descriptives_pooled.csv", index=True)
    if args.out:
        blob = {
            "metadata": stats["metadata"],
            "pooled": {v: s.to_dict() for v, s in stats["pooled"].items()},
            "per_series": {f"{e}/{v}": s.to_dict()
                           for (e, v), s in stats["per_series"].items()},
        }
        _emit_text(json.dumps(blob, indent=2, sort_keys=True) + "\n", args,
                   "descriptives.json")
    return 0


def cmd_stationarity(args) -> int:
    panel = _load_panel(args)
    verdicts = {}
    for ent in panel.entities:
        for var in panel.variable_names():
            series = panel.series(ent, var)
            adf = adf_test(series, max_lag=args.max_lag, form=args.form,
                           significance=args.significance)
            kpss = kpss_test(series, form=args.form, bandwidth=args.kpss_bandwidth,
                             significance=args.significance)
            verdicts[(ent, var)] = classify(adf, kpss)
    grid = rpt.stationarity_grid(verdicts, panel.entities, panel.variable_names())
    _emit(grid, args, "stationarity_grid.csv", index=True)
    if args.out:
        _emit(rpt.stationarity_tidy(verdicts), args, "stationarity.csv", index=False)
    return 0


def cmd_rolling(args) -> int:
    panel = _load_panel(args)
    if args.model in RQ_MODELS and not args.dependent:
        model = RQ_MODELS[args.model]
    else:
        if not (args.dependent and args.regressors):
            raise SystemExit("custom models need --dependent and --regressors")
        model = ModelSpec(args.model, args.dependent, tuple(args.regressors))
    results = rolling_table(panel, model, args.windows)
    _emit(rpt.rolling_grid(results), args, f"rolling_{model.name.lower()}.csv",
          index=False)
    _emit_text(rpt.rolling_text(results,
                                f"{model.name}: {model.dependent} ~ "
                                f"{' + '.join(model.regressors)}"),
               args, f"rolling_{model.name.lower()}.txt")
    return 0


def cmd_var(args) -> int:
    panel = _load_panel(args)
    entities = args.entities or panel.entities
    summary = {}
    for ent in entities:
        block = panel.slice_entity(ent)
        sel = select_lag(block, p_max=args.p_max, deterministic=args.deterministic)
        p = args.p or sel.chosen
        fit = fit_var(block, p, form=args.var_form, deterministic=args.deterministic)
        rms = model_rms(fit, block)
        _, jb = jarque_bera(fit.residuals)
        summary[ent] = {
            "p": p,
            "lag_selection": {"chosen": sel.chosen, "rule": sel.rule},
            "spectral_radius": fit.spectral_radius,
            "rms": {k: v.rms for k, v in rms.items()},
            "jarque_bera": jb.to_dict(),
            "intercept": fit.intercept.tolist(),
            "lag_matrices": [m.tolist() for m in fit.lag_matrices],
            "sigma": fit.sigma.tolist(),
        }
    text = json.dumps(summary, indent=2, sort_keys=True) + "\n"
    _emit_text(text, args, "var_summary.json")
    return 0


def cmd_granger(args) -> int:
    panel = _load_panel(args)
    entities = args.entities or panel.entities
    variables = panel.variable_names()
    for ent in entities:
        block = panel.slice_entity(ent)
        p = args.p
        if p is None:
            p = select_lag(block, p_max=args.p_max).chosen
        reports = {}
        for cause in variables:
            for effect in variables:
                if cause != effect:
                    reports[(cause, effect)] = granger_test(block, cause, effect, p)
        grid = rpt.granger_grid(reports, variables)
        if not args.out:
            print(f"== {ent} (p={p}) ==")
        _emit(grid, args, f"granger_{ent}.csv", index=True)
    return 0


def cmd_johansen(args) -> int:
    panel = _load_panel(args)
    entities = args.entities or panel.entities
    variables = panel.variable_names()
    for ent in entities:
        pairs = pairwise_grid(panel, ent, variables, p=args.p, det=args.det,
                              p_max=args.p_max)
        if not args.out:
            print(f"== {ent} ==")
        _emit(rpt.johansen_grid(pairs, variables), args, f"johansen_{ent}.csv",
              index=True)
    return 0


def cmd_connectedness(args) -> int:
    panel = _load_panel(args)
    block = panel.slice_variable(args.variable)
    fit = fit_qvar(block, args.p, args.theta)
    table = gfevd(fit, args.horizon)
    rep = connectedness_report(table)
    tag = f"{args.variable}_q{int(round(args.theta * 100)):02d}"
    _emit(rpt.connectedness_frame(rep), args, f"connectedness_{tag}.csv", index=True)
    if args.window:
        windows = rolling_connectedness(block, args.p, args.horizon,
                                        args.theta, args.window)
        _emit(rpt.windowed_frame(windows), args, f"npdc_windows_{tag}.csv",
              index=False)
    if args.out:
        _emit_text(npdc_to_dot(rep), args, f"npdc_{tag}.dot")
        _emit_text(npdc_node_link_json(rep), args, f"npdc_{tag}.json")
    return 0


def cmd_sweep(args) -> int:
    panel = _load_panel(args)
    block = panel.slice_variable(args.variable)
    thetas = args.thetas or None
    sweep = quantile_sweep(block, args.p, args.horizon, thetas)
    _emit(rpt.sweep_frame(sweep, "from"), args, f"sweep_{args.variable}_from.csv",
          index=False)
    _emit(rpt.sweep_frame(sweep, "to"), args, f"sweep_{args.variable}_to.csv",
          index=False)
    return 0


def cmd_simulate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.preset == "example-panel":
        panel, manifest = example_panel(seed=args.seed, T=args.t)
    else:
        params = json.loads(Path(args.params).read_text()) if args.params else {}
        if args.kind == "var" and "lag_matrices" not in params:
            params = {**params, **_random_stable_var(args.k, args.seed)}
        if args.kind in ("white-noise", "random-walk"):
            params.setdefault("k", args.k)
        spec = ProcessSpec(kind=args.kind, T=args.t, seed=args.seed,
                           parameters=params)
        panel, manifest = simulate(spec)
    write_panel_csv(panel, out / "panel.csv")
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(out / "panel.csv")
    print(out / "manifest.json")
    return 0


def _random_stable_var(k: int, seed: int) -> dict:
    rng = np.random.Generator(np.random.PCG64(seed ^ 0x5F5E))
    A = 0.3 * np.eye(k) + rng.uniform(-0.15, 0.15, size=(k, k))
    eig = np.max(np.abs(np.linalg.eigvals(A)))
    if eig >= 0.95:
        A *= 0.9 / eig
    return {"lag_matrices": [A.tolist()]}


def cmd_validate_fixture(args) -> int:
    report = rpt.validate_fixture(args.file, args.kind)
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return 0 if report.passed else 1


def cmd_run(args) -> int:
    overrides = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            overrides = json.load(fh)
    config = AnalysisConfig.from_dict(overrides)
    # flags override the config file
    if args.input:
        config.settings["input"]["path"] = str(args.input)
    if not config.settings["input"]["path"]:
        config.settings["input"]["path"] = str(bundled_example_path())
    if args.horizon is not None:
        config.settings["connectedness"]["horizon"] = args.horizon
    if args.p is not None:
        config.settings["connectedness"]["p"] = args.p
    if args.window is not None:
        config.settings["connectedness"]["window"] = args.window
    if args.log_variables:
        config.settings["transforms"]["log_variables"] = args.log_variables
    if args.difference:
        config.settings["transforms"]["difference"] = args.difference
    report = run_pipeline(config, args.out)
    for stage in report["stages"]:
        marker = "ok " if stage["status"] == "ok" else "ERR"
        print(f"[{marker}] {stage['stage']}"
              + (f": {stage['error']}" if stage["error"] else ""))
    print(f"outputs: {args.out} ({len(report['files'])} files)")
    return 0 if report["ok"] else 1


# ----------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="spillkit",
        description="panel econometrics: stationarity, rolling OLS, "
                    "VAR/Granger, Johansen cointegration, QVAR connectedness")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("describe", help="descriptive statistics")
    _add_input_args(p); _out_arg(p)
    p.set_defaults(fn=cmd_describe)

    p = sub.add_parser("stationarity", help="ADF + KPSS verdict grid")
    _add_input_args(p); _out_arg(p)
    p.add_argument("--form", choices=["constant", "constant+trend"],
                   default="constant")
    p.add_argument("--max-lag", type=int, default=None)
    p.add_argument("--kpss-bandwidth", default="short")
    p.add_argument("--significance", type=float, default=0.05)
    p.set_defaults(fn=cmd_stationarity)

    p = sub.add_parser("rolling", help="rolling-window OLS mean R2 table")
    _add_input_args(p); _out_arg(p)
    p.add_argument("--model", default="RQ1",
                   help="RQ1|RQ2|RQ3 or a name for a custom model")
    p.add_argument("--dependent")
    p.add_argument("--regressors", nargs="*")
    p.add_argument("--windows", type=int, nargs="+", default=[4, 5, 6, 7, 8])
    p.set_defaults(fn=cmd_rolling)

    p = sub.add_parser("var", help="per-entity VAR fit, RMS and diagnostics")
    _add_input_args(p); _out_arg(p)
    p.add_argument("--entities", nargs="*")
    p.add_argument("--p", type=int, default=None)
    p.add_argument("--p-max", type=int, default=2)
    p.add_argument("--var-form", choices=["levels", "differences"],
                   default="levels")
    p.add_argument("--deterministic", choices=["const", "const+trend"],
                   default="const")
    p.set_defaults(fn=cmd_var)

    p = sub.add_parser("granger", help="cause x effect F-test grids")
    _add_input_args(p); _out_arg(p)
    p.add_argument("--entities", nargs="*")
    p.add_argument("--p", type=int, default=None)
    p.add_argument("--p-max", type=int, default=2)
    p.set_defaults(fn=cmd_granger)

    p = sub.add_parser("johansen", help="pairwise cointegration grids")
    _add_input_args(p); _out_arg(p)
    p.add_argument("--entities", nargs="*")
    p.add_argument("--p", type=int, default=None)
    p.add_argument("--p-max", type=int, default=2)
    p.add_argument("--det", choices=["none", "restricted-constant",
                                     "restricted-trend"],
                   default="restricted-constant")
    p.set_defaults(fn=cmd_johansen)

    p = sub.add_parser("connectedness", help="QVAR spillover table at one quantile")
    _add_input_args(p); _out_arg(p)
    p.add_argument("--variable", default="iep")
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--horizon", type=int, default=10)
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--window", type=int, default=None,
                   help="emit per-window over-time reports of this length")
    p.set_defaults(fn=cmd_connectedness)

    p = sub.add_parser("sweep", help="connectedness across a quantile grid")
    _add_input_args(p); _out_arg(p)
    p.add_argument("--variable", default="iep")
    p.add_argument("--horizon", type=int, default=10)
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--thetas", type=float, nargs="*")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("simulate", help="write a synthetic panel + manifest")
    p.add_argument("--kind", choices=["white-noise", "ar", "var", "random-walk",
                                      "cointegrated-pair",
                                      "time-varying-slope-panel"],
                   default="var")
    p.add_argument("--preset", choices=["example-panel"], default=None)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--t", type=int, default=200)
    p.add_argument("--seed", type=int, default=20240)
    p.add_argument("--params", help="JSON file of kind-specific parameters")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("validate-fixture", help="check table arithmetic identities")
    p.add_argument("--file", required=True)
    p.add_argument("--kind", choices=["connectedness", "sweep"], required=True)
    p.set_defaults(fn=cmd_validate_fixture)

    p = sub.add_parser("run", help="full pipeline into an output directory")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--input")
    p.add_argument("--out", required=True)
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--p", type=int, default=None)
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--log-variables", nargs="*", default=[])
    p.add_argument("--difference", type=int, default=0)
    p.set_defaults(fn=cmd_run)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SpillkitError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
