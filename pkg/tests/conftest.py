import numpy as np
import pytest

from spillkit.panel import Panel, Series, VariableRole


def rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def panel_from_arrays(entities, variables, arrays, start_year=2000) -> Panel:
    """arrays[(entity, variable)] -> 1-D values (no missing)."""
    T = len(next(iter(arrays.values())))
    years = np.arange(start_year, start_year + T)
    data = {}
    for key, vals in arrays.items():
        vals = np.asarray(vals, dtype=float)
        data[key] = Series(years, vals, np.zeros(T, dtype=bool))
    return Panel(entities=tuple(entities),
                 variables=tuple(VariableRole.of(v) for v in variables),
                 data=data)


@pytest.fixture
def two_country_csv(tmp_path):
    """2 countries x 21 years x 5 variables, one blank cell."""
    lines = ["entity,year,fdi,trd,inv,ifr,iep"]
    gen = rng(99)
    for ent in ("AA", "BB"):
        for i, year in enumerate(range(2000, 2021)):
            vals = 50 + 10 * gen.standard_normal(5)
            cells = [f"{v:.6f}" for v in vals]
            if ent == "BB" and year == 2005:
                cells[2] = ""  # blank inv cell
            lines.append(f"{ent},{year}," + ",".join(cells))
    path = tmp_path / "panel.csv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def mc_gfevd(mats, sigma, H, reps, seed):
    """Monte Carlo forecast-error variance decomposition (independent route).

    Draws shocks, propagates them through the VAR recursion directly, and
    derives generalized shares from covariances between the propagated
    contributions and the shocks themselves.
    """
    k = sigma.shape[0]
    gen = rng(seed)
    chol = np.linalg.cholesky(sigma)
    num = np.zeros((k, k))
    F = np.zeros((reps, k))
    for s in range(H):
        steps = H - 1 - s
        u = gen.standard_normal((reps, k)) @ chol.T
        hist = [u]
        for _ in range(steps):
            acc = np.zeros_like(u)
            for i, A in enumerate(mats[:len(hist)], start=1):
                acc += hist[-i] @ A.T
            hist.append(acc)
        v = hist[-1]
        F += v
        vc = v - v.mean(axis=0)
        uc = u - u.mean(axis=0)
        C = vc.T @ uc / (reps - 1)
        num += C**2 / np.diag(sigma)[None, :]
    den = F.var(axis=0, ddof=1)
    shares = num / den[:, None]
    return 100.0 * shares / shares.sum(axis=1, keepdims=True)
