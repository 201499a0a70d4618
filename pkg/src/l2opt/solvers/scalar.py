"""One-dimensional maximization helpers."""
from __future__ import annotations

import numpy as np

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f, lo: float, hi: float, tol: float = 1e-10, max_iter: int = 200):
    """Maximize ``f`` on [lo, hi] by golden-section search.

    Returns (x, f(x)).  Unimodality is the caller's promise; on flat or
    multimodal objectives the result is a local maximum.  The bracket
    endpoints are always candidates, so boundary optima are found exactly.
    """
    if hi < lo:
        raise ValueError("empty bracket")
    a, b = float(lo), float(hi)
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a <= tol * (1.0 + abs(a) + abs(b)):
            break
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = f(x1)
    candidates = [(a, f(a)), (x1, f1), (x2, f2), (b, f(b))]
    x_best, f_best = max(candidates, key=lambda t: t[1])
    return float(x_best), float(f_best)


def grid_then_golden(f, lo: float, hi: float, n_grid: int = 64, tol: float = 1e-10):
    """Coarse grid scan followed by golden-section refinement around the best cell.

    Robust against mild multimodality at the cost of n_grid extra evaluations.
    """
    xs = np.linspace(lo, hi, max(int(n_grid), 2))
    vals = np.array([f(x) for x in xs])
    i = int(np.argmax(vals))
    a = xs[max(i - 1, 0)]
    b = xs[min(i + 1, len(xs) - 1)]
    x, v = golden_section_max(f, a, b, tol=tol)
    if vals[i] > v:
        return float(xs[i]), float(vals[i])
    return x, v
