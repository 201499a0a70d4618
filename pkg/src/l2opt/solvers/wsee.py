"""Power allocation maximizing weighted sum energy efficiency.

Three solvers over the box [p_min, p_max]^K:

* :func:`solve_wsee_global` scans a per-user log-spaced power grid and is the
  reference for near-global values at small K.
* :func:`solve_wsee_sca` runs successive convex approximation: a quadratic
  transform of the efficiency ratios plus linearization of the interference
  term gives a concave minorant that touches the objective at the current
  iterate, maximized by projected gradient ascent.  The true objective is
  non-decreasing along the iterates.
* :func:`solve_wsee_best_only` serves only the user with the strongest direct
  gain at its single-user optimal power, everyone else at the floor.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..env.interference import InterferenceScenario, wsee, wsee_batch
from .scalar import golden_section_max

MAX_GRID_POINTS = 2**24
LN2 = np.log(2.0)


@dataclass
class PowerSolution:
    p: np.ndarray
    value: float
    trace: np.ndarray = field(default_factory=lambda: np.empty(0))


def max_power_solution(s: InterferenceScenario) -> PowerSolution:
    p = s.p_max_w.copy()
    return PowerSolution(p=p, value=wsee(s, p))


def power_axes(s: InterferenceScenario, points_per_user: int, span_decades: float = 6.0):
    """Per-user candidate powers: log-spaced plus the exact box corners."""
    axes = []
    for k in range(s.n_users):
        lo_box, hi = s.p_min_w[k], s.p_max_w[k]
        if hi <= 0.0:
            axes.append(np.array([lo_box]))
            continue
        lo = max(lo_box, hi * 10.0 ** (-span_decades))
        axis = np.geomspace(lo, hi, points_per_user)
        extra = [lo_box]
        axis = np.unique(np.concatenate([axis, np.asarray(extra)]))
        axes.append(axis)
    return axes


def solve_wsee_global(
    s: InterferenceScenario,
    points_per_user: int = 64,
    span_decades: float = 6.0,
    chunk: int = 1 << 16,
) -> PowerSolution:
    """Exhaustive scan of the power grid; exact on the grid, near-global off it."""
    axes = power_axes(s, points_per_user, span_decades)
    sizes = np.array([len(a) for a in axes], dtype=np.int64)
    total = int(np.prod(sizes))
    if total > MAX_GRID_POINTS:
        raise ValueError(f"grid of {total} points exceeds cap {MAX_GRID_POINTS}")
    best_v = -np.inf
    best_p = None
    strides = np.concatenate([np.cumprod(sizes[::-1])[-2::-1], [1]])
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        P = np.empty((len(idx), s.n_users))
        for k in range(s.n_users):
            P[:, k] = axes[k][(idx // strides[k]) % sizes[k]]
        vals = wsee_batch(s, P)
        i = int(np.argmax(vals))
        if vals[i] > best_v:
            best_v = float(vals[i])
            best_p = P[i].copy()
    return PowerSolution(p=best_p, value=best_v)


def solve_wsee_best_only(s: InterferenceScenario, tol: float = 1e-12) -> PowerSolution:
    """Single-user benchmark: optimize only the strongest user's power."""
    k = int(np.argmax(np.diag(s.gains)))
    base = s.p_min_w.copy()

    def objective(x):
        p = base.copy()
        p[k] = x
        return wsee(s, p)

    x, v = golden_section_max(objective, s.p_min_w[k], s.p_max_w[k], tol=tol)
    p = base.copy()
    p[k] = x
    return PowerSolution(p=p, value=v)


def _surrogate(s: InterferenceScenario, anchor: np.ndarray):
    """Concave minorant of WSEE that is tight at ``anchor``.

    Returns (h, grad_h) as closures.  For each user, the rate is lower-bounded
    through linearization of the interference log-term at the anchor, and the
    ratio bound 2*y*sqrt(A) - y^2*den <= A/den is applied with the multiplier
    y fixed at the anchor, where it holds with equality.
    """
    diag = np.diag(s.gains).copy()
    off = s.gains - np.diag(diag)
    noise = s.noise_w
    wB = s.weights * s.bandwidth_hz

    i_anchor = noise + off @ anchor
    # A_k(p) = wB_k * [log2(noise + g_k . p) - log2(i_anchor_k)
    #                  - (off_k . (p - anchor)) / (i_anchor_k * ln 2)]
    const = -np.log2(i_anchor) + (off @ anchor) / (i_anchor * LN2)
    lin = off / (i_anchor[:, None] * LN2)

    def parts(p):
        s_tot = noise + s.gains @ p
        a = wB * (np.log2(s_tot) + const - lin @ p)
        den = s.static_power_w + s.power_scale * p
        return a, den, s_tot

    a0, den0, _ = parts(anchor)
    y = np.sqrt(np.maximum(a0, 0.0)) / den0

    def h(p):
        a, den, _ = parts(p)
        return float(np.sum(2.0 * y * np.sqrt(np.maximum(a, 0.0)) - y**2 * den))

    def grad_h(p):
        a, den, s_tot = parts(p)
        da = wB[:, None] * (s.gains / (s_tot[:, None] * LN2) - lin)  # (K, K) rows: dA_k/dp
        pos = a > 0.0
        coef = np.where(pos, y / np.sqrt(np.maximum(a, 1e-300)), 0.0)
        return coef @ da - y**2 * s.power_scale

    return h, grad_h


def _ascend(h, grad_h, p0, lo, hi, max_iter: int = 200):
    """Projected gradient ascent with backtracking; never accepts a decrease."""
    p = p0.copy()
    hp = h(p)
    step = None
    for _ in range(max_iter):
        g = grad_h(p)
        gnorm = float(np.linalg.norm(g))
        if gnorm == 0.0:
            break
        if step is None:
            step = 0.1 * float(np.max(hi - lo)) / gnorm if gnorm > 0 else 1.0
        step *= 2.0
        improved = False
        for _ in range(60):
            cand = np.clip(p + step * g, lo, hi)
            hc = h(cand)
            move = cand - p
            if hc > hp + 1e-4 * float(g @ move) and hc > hp:
                p, hp = cand, hc
                improved = True
                break
            step *= 0.5
            if step < 1e-18:
                break
        if not improved:
            break
        if float(np.linalg.norm(move)) <= 1e-12 * (1.0 + float(np.linalg.norm(p))):
            break
    return p, hp


def solve_wsee_sca(
    s: InterferenceScenario,
    init: np.ndarray | str = "max_power",
    tol: float = 1e-8,
    max_iter: int = 500,
    inner_iters: int = 200,
) -> PowerSolution:
    """Successive convex approximation from ``init`` ("max_power" or a vector).

    The returned trace is the objective after each outer iteration, starting
    with the initial point; it is non-decreasing up to round-off.
    """
    if isinstance(init, str):
        if init != "max_power":
            raise ValueError(f"unknown init {init!r}")
        p = s.p_max_w.copy()
    else:
        p = np.clip(np.asarray(init, dtype=np.float64), s.p_min_w, s.p_max_w)
    v = wsee(s, p)
    trace = [v]
    for _ in range(max_iter):
        h, grad_h = _surrogate(s, p)
        p_new, _ = _ascend(h, grad_h, p, s.p_min_w, s.p_max_w, max_iter=inner_iters)
        v_new = wsee(s, p_new)
        if v_new < v:
            # the minorant touches at p, so this is round-off; keep the iterate
            p_new, v_new = p, v
        trace.append(v_new)
        if v_new - v <= tol * max(1.0, abs(v)):
            p, v = p_new, v_new
            break
        p, v = p_new, v_new
    return PowerSolution(p=p, value=v, trace=np.asarray(trace))
