"""Seeded synthetic processes with ground-truth manifests.

Every generator is a pure function of (spec, seed) via numpy's PCG64
generator, so fixtures are bit-reproducible.  Manifests record the true
parameters and, for VAR kinds, the analytic variance decomposition, giving
the estimators something exact to be checked against.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .connectedness import GfevdTable
from .errors import UnstableSpec
from .panel import Panel, Series, VariableRole
from .varmodel import companion_matrix

KINDS = ("white-noise", "ar", "var", "random-walk", "cointegrated-pair",
         "time-varying-slope-panel")


@dataclass(frozen=True)
class ProcessSpec:
    """Recipe for one synthetic draw.

    ``parameters`` is kind-specific:
      white-noise: {k, sigma?}            ar: {phi: [..], sigma?}
      var: {intercept?, lag_matrices, sigma?, names?}
      random-walk: {k, drift?}            cointegrated-pair: {beta, noise_sd?}
      time-varying-slope-panel: {entities?, slopes: [early, late], noise_sd?}
    """

    kind: str
    T: int
    seed: int
    parameters: dict = field(default_factory=dict)
    burn_in: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.T < 2:
            raise ValueError("T must be >= 2")

    @property
    def effective_burn_in(self) -> int:
        if self.burn_in is not None:
            return self.burn_in
        return 0 if self.kind in ("random-walk", "cointegrated-pair") else 100


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def spectral_radius(lag_matrices) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(companion_matrix(lag_matrices)))))


def _var_params(spec: ProcessSpec):
    pars = spec.parameters
    mats = [np.asarray(a, dtype=float) for a in pars["lag_matrices"]]
    k = mats[0].shape[0]
    intercept = np.asarray(pars.get("intercept", np.zeros(k)), dtype=float)
    sigma = np.asarray(pars.get("sigma", np.eye(k)), dtype=float)
    names = tuple(pars.get("names", [f"y{i + 1}" for i in range(k)]))
    return intercept, mats, sigma, names


def simulate_var_values(intercept, lag_matrices, sigma, T, rng,
                        burn_in: int = 100) -> np.ndarray:
    """Draw a VAR path; the first max-lag values start at the intercept level."""
    k = len(intercept)
    p = len(lag_matrices)
    chol = np.linalg.cholesky(sigma)
    total = T + burn_in
    y = np.zeros((total + p, k))
    y[:p] = intercept
    shocks = rng.standard_normal((total, k)) @ chol.T
    for t in range(p, total + p):
        acc = intercept.copy()
        for i, A in enumerate(lag_matrices, start=1):
            acc += A @ y[t - i]
        y[t] = acc + shocks[t - p]
    return y[p + burn_in:]


def simulate(spec: ProcessSpec):
    """Generate (panel, manifest) for a spec; pure in (spec, seed)."""
    rng = _rng(spec.seed)
    burn = spec.effective_burn_in
    kind = spec.kind
    pars = spec.parameters

    if kind == "white-noise":
        k = int(pars.get("k", 1))
        sd = float(pars.get("sigma", 1.0))
        values = rng.standard_normal((spec.T, k)) * sd
        names = [f"y{i + 1}" for i in range(k)]
        manifest = {"kind": kind, "sigma": sd, "k": k}

    elif kind == "ar":
        phi = np.asarray(pars["phi"], dtype=float).ravel()
        sd = float(pars.get("sigma", 1.0))
        mats = [np.array([[c]]) for c in phi]
        radius = spectral_radius(mats)
        if radius >= 1.0:
            raise UnstableSpec(f"AR spectral radius {radius:.4f} >= 1")
        values = simulate_var_values(np.zeros(1), mats, np.array([[sd**2]]),
                                     spec.T, rng, burn)
        names = ["y1"]
        manifest = {"kind": kind, "phi": phi.tolist(), "sigma": sd,
                    "spectral_radius": radius}

    elif kind == "var":
        intercept, mats, sigma, names_t = _var_params(spec)
        radius = spectral_radius(mats)
        if radius >= 1.0:
            raise UnstableSpec(f"VAR spectral radius {radius:.4f} >= 1")
        values = simulate_var_values(intercept, mats, sigma, spec.T, rng, burn)
        names = list(names_t)
        manifest = {
            "kind": kind,
            "intercept": intercept.tolist(),
            "lag_matrices": [m.tolist() for m in mats],
            "sigma": sigma.tolist(),
            "spectral_radius": radius,
            "true_gfevd_h10": true_gfevd(spec, 10).shares.tolist(),
        }

    elif kind == "random-walk":
        k = int(pars.get("k", 1))
        drift = float(pars.get("drift", 0.0))
        steps = rng.standard_normal((spec.T, k)) + drift
        values = np.cumsum(steps, axis=0)
        names = [f"y{i + 1}" for i in range(k)]
        manifest = {"kind": kind, "drift": drift, "k": k}

    elif kind == "cointegrated-pair":
        beta = float(pars.get("beta", 2.0))
        noise_sd = float(pars.get("noise_sd", 1.0))
        x = np.cumsum(rng.standard_normal(spec.T))
        y = beta * x + noise_sd * rng.standard_normal(spec.T)
        values = np.column_stack([x, y])
        names = ["x", "y"]
        manifest = {"kind": kind, "beta": beta, "noise_sd": noise_sd,
                    "cointegration_rank": 1,
                    "cointegrating_vector": [1.0, -1.0 / beta],
                    "note": "y - beta*x is stationary; vector scaled to x"}
        # conventional normalisation (1, -beta) on (y, x) ordering:
        manifest["cointegrating_vector_yx"] = [1.0, -beta]

    elif kind == "time-varying-slope-panel":
        slopes = pars.get("slopes", [1.0, -1.0])
        noise_sd = float(pars.get("noise_sd", 0.25))
        x = rng.standard_normal(spec.T) + 2.0
        half = spec.T // 2
        slope_path = np.where(np.arange(spec.T) < half, slopes[0], slopes[1])
        y = 1.0 + slope_path * x + noise_sd * rng.standard_normal(spec.T)
        values = np.column_stack([y, x])
        names = ["y", "x"]
        manifest = {"kind": kind, "slopes": list(map(float, slopes)),
                    "switch_index": half, "noise_sd": noise_sd}

    else:  # pragma: no cover - guarded by ProcessSpec
        raise ValueError(kind)

    panel = _to_panel(values, names, start_year=int(pars.get("start_year", 2000)))
    manifest = {"spec": {"kind": spec.kind, "T": spec.T, "seed": spec.seed,
                         "burn_in": burn, "parameters": _jsonable(pars)},
                **manifest}
    return panel, manifest


def _to_panel(values: np.ndarray, names, start_year: int) -> Panel:
    """One entity per column, single variable 'y' (system nodes as entities)."""
    T = values.shape[0]
    years = np.arange(start_year, start_year + T)
    data = {}
    for j, name in enumerate(names):
        data[(name, "y")] = Series(years, values[:, j],
                                   np.zeros(T, dtype=bool))
    return Panel(entities=tuple(names), variables=(VariableRole.of("y"),),
                 data=data)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer, np.floating)):
        return obj.item()
    return obj


def true_gfevd(spec: ProcessSpec, horizon: int) -> GfevdTable:
    """Variance decomposition from the *specified* coefficients.

    Uses a direct recursive MA expansion (Psi_h = sum A_i Psi_{h-i}) so it is
    an independent route from the companion-power implementation it checks.
    """
    if spec.kind != "var":
        raise ValueError("true_gfevd needs a var spec")
    _, mats, sigma, names = _var_params(spec)
    radius = spectral_radius(mats)
    if radius >= 1.0:
        raise UnstableSpec(f"VAR spectral radius {radius:.4f} >= 1")
    k = sigma.shape[0]
    p = len(mats)

    psis = [np.eye(k)]
    for h in range(1, horizon):
        acc = np.zeros((k, k))
        for i in range(1, min(h, p) + 1):
            acc += mats[i - 1] @ psis[h - i]
        psis.append(acc)

    diag = np.diag(sigma)
    num = np.zeros((k, k))
    den = np.zeros(k)
    for h in range(horizon):
        ps = psis[h] @ sigma
        num += ps**2 / diag[None, :]
        den += np.einsum("ij,ij->i", ps, psis[h])
    shares = num / den[:, None]
    shares = 100.0 * shares / shares.sum(axis=1, keepdims=True)
    return GfevdTable(names, horizon, shares)


# ----------------------------------------------------------------------
# Bundled multi-entity example panel
# ----------------------------------------------------------------------


def example_panel(n_entities: int = 7, T: int = 25, seed: int = 20240,
                  start_year: int = 1998):
    """A multi-country demo panel: per-entity 5-variable stable VAR(1) levels.

    Returns (panel, manifest).  Values are shifted well above zero so log
    configuration choices stay legal.
    """
    roles = ["fdi", "trd", "inv", "ifr", "iep"]
    entities = [f"C{i + 1}" for i in range(n_entities)]
    rng = _rng(seed)
    years = np.arange(start_year, start_year + T)

    data = {}
    manifest_entities = {}
    for e_ix, ent in enumerate(entities):
        # mildly cross-correlated stable system, distinct per entity
        A = 0.35 * np.eye(5) + rng.uniform(-0.12, 0.12, size=(5, 5))
        radius = spectral_radius([A])
        if radius >= 0.95:
            A *= 0.9 / radius
        sigma = np.diag(rng.uniform(0.5, 1.5, size=5))
        level = rng.uniform(60.0, 140.0, size=5)
        values = simulate_var_values(np.zeros(5), [A], sigma, T, rng, 100)
        values = values + level
        for v_ix, role in enumerate(roles):
            data[(ent, role)] = Series(years, values[:, v_ix],
                                       np.zeros(T, dtype=bool))
        manifest_entities[ent] = {
            "lag_matrix": A.tolist(),
            "sigma": sigma.tolist(),
            "level": level.tolist(),
            "spectral_radius": spectral_radius([A]),
        }

    panel = Panel(entities=tuple(entities),
                  variables=tuple(VariableRole.of(r) for r in roles),
                  data=data)

    from .panel import describe  # local import to avoid a cycle at module load
    stats = describe(panel)
    manifest = {
        "generator": "example_panel",
        "seed": seed,
        "T": T,
        "start_year": start_year,
        "entities": manifest_entities,
        "descriptive_stats": {
            f"{ent}/{var}": st.to_dict()
            for (ent, var), st in stats["per_series"].items()
        },
    }
    return panel, manifest


def panel_to_frame(panel: Panel):
    """Long-format DataFrame (entity, year, one column per variable)."""
    import pandas as pd

    rows = []
    for ent in panel.entities:
        for t, year in enumerate(panel.years):
            row = {"entity": ent, "year": int(year)}
            for name in panel.variable_names():
                s = panel.series(ent, name)
                row[name] = "" if s.missing[t] else repr(float(s.values[t]))
            rows.append(row)
    return pd.DataFrame(rows)


def write_panel_csv(panel: Panel, path) -> None:
    frame = panel_to_frame(panel)
    frame.to_csv(path, index=False)
