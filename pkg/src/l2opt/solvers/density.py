"""Base-station density maximizing energy efficiency."""
from __future__ import annotations

import dataclasses

import numpy as np

from ..env.cellular import AnalyticEeModel, CellularConfig, analytic_ee, empirical_ee
from .scalar import golden_section_max


def optimal_density(
    m: AnalyticEeModel,
    lo: float = 1e-7,
    hi: float = 1e-3,
    n_grid: int = 64,
    tol: float = 1e-12,
):
    """Maximize EE over [lo, hi]: log-spaced scan plus golden refinement.

    Returns (density, ee).  Boundary maximizers are returned as-is, so
    degenerate configs (no idle power draw) land on an endpoint.
    """
    grid = np.geomspace(lo, hi, max(int(n_grid), 2))
    vals = analytic_ee(grid, m)
    i = int(np.argmax(vals))
    a = np.log10(grid[max(i - 1, 0)])
    b = np.log10(grid[min(i + 1, len(grid) - 1)])
    u, v = golden_section_max(lambda t: analytic_ee(10.0**t, m), a, b, tol=tol)
    if vals[i] > v:
        return float(grid[i]), float(vals[i])
    return float(10.0**u), float(v)


def empirical_optimal_density(
    cfg: CellularConfig,
    rng: np.random.Generator,
    lambdas: np.ndarray,
    n_realizations: int,
):
    """Pick the candidate density with the best Monte-Carlo EE estimate.

    Returns (density, ee).  Every candidate is evaluated on the same
    pseudo-random draws (one base seed for all), which cancels most of the
    shared terminal-placement noise out of the comparison; the argmax
    still carries sampling error that more realizations tighten.
    """
    base = int(rng.integers(2**63))
    best_lam, best_ee = None, -np.inf
    for lam in np.asarray(lambdas, dtype=np.float64):
        ee = empirical_ee(dataclasses.replace(cfg, bs_density=float(lam)),
                          np.random.default_rng(base), n_realizations).ee
        if ee > best_ee:
            best_lam, best_ee = float(lam), float(ee)
    return best_lam, best_ee
