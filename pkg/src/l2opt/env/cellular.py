"""Downlink cellular deployments: analytic energy efficiency and Monte Carlo.

Two deployment kinds over a square window: Poisson (random BS count and
positions) and a centered square lattice matched to the same density.  Mobile
terminals form an independent Poisson process.  Each terminal associates with
the strongest base station on average (nearest, under the pure power-law
loss), passes an access test on its mean SNR, and is in coverage if its
instantaneous SIR under Rayleigh fading clears the data threshold.  Active
cells split the band evenly across their covered terminals.

The analytic counterpart models the same quantities for Poisson deployments:

    SE(lam) = B log2(1+g_D) * lam*L(x) / (1 + Y*L(x)) * Q(lam, P_tx, x)
    P_grid(lam) = lam*P_tx*L(x) + lam_MT*P_circ + lam*P_idle*(1 - L(x))

with x = lam_MT/lam, L the cell-activity probability, Y an interference
factor depending on the SIR threshold and path loss exponent, and Q a
conditioning factor (1 by default).  L and Q are injectable.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate


@dataclass
class CellularConfig:
    kind: str = "poisson"            # "poisson" or "grid"
    bs_density: float = 1e-5         # per m^2
    mt_density: float = 3e-5
    window_m: float = 2000.0
    p_tx_w: float = 1.0
    p_circ_w: float = 1.0
    p_idle_w: float = 0.5
    gamma_d: float = 1.0             # SIR coverage threshold, linear
    gamma_a: float = 0.1             # mean-SNR access threshold, linear
    bandwidth_hz: float = 1e6
    path_alpha: float = 4.0
    noise_w: float | None = None

    def noise(self) -> float:
        if self.noise_w is not None:
            return self.noise_w
        dbm = -174.0 + 10.0 * np.log10(self.bandwidth_hz) + 3.0
        return 10.0 ** (dbm / 10.0) * 1e-3


@dataclass
class DeploymentRealization:
    bs_xy: np.ndarray
    mt_xy: np.ndarray
    window_m: float

    @property
    def area_m2(self) -> float:
        return self.window_m**2


@dataclass
class RealizationResult:
    pse: float
    pgrid: float
    covered: np.ndarray     # per-terminal coverage flags
    cell_load: np.ndarray   # covered terminals per BS


def realize_deployment(cfg: CellularConfig, rng: np.random.Generator) -> DeploymentRealization:
    window = cfg.window_m
    if cfg.kind == "poisson":
        n_bs = rng.poisson(cfg.bs_density * window**2)
        bs = rng.uniform(0.0, window, size=(n_bs, 2))
    elif cfg.kind == "grid":
        spacing = 1.0 / np.sqrt(cfg.bs_density)
        n_side = max(1, int(round(cfg.window_m / spacing)))
        window = n_side * spacing  # integer multiple keeps the density exact
        marks = (np.arange(n_side) + 0.5) * spacing
        bs = np.array([(x, y) for x in marks for y in marks])
    else:
        raise ValueError(f"unknown deployment kind {cfg.kind!r}")
    n_mt = rng.poisson(cfg.mt_density * window**2)
    mt = rng.uniform(0.0, window, size=(n_mt, 2))
    return DeploymentRealization(bs_xy=bs, mt_xy=mt, window_m=window)


def evaluate_realization(
    cfg: CellularConfig,
    real: DeploymentRealization,
    fading: np.ndarray | None = None,
    rng: np.random.Generator | None = None,
) -> RealizationResult:
    """Coverage, spectral efficiency and grid power for one snapshot.

    ``fading`` holds per (terminal, BS) exponential power gains; drawn from
    ``rng`` when not supplied.
    """
    n_bs = len(real.bs_xy)
    n_mt = len(real.mt_xy)
    if n_bs == 0:
        return RealizationResult(0.0, 0.0, np.zeros(n_mt, dtype=bool), np.zeros(0))
    if n_mt == 0:
        pgrid = n_bs * cfg.p_idle_w / real.area_m2
        return RealizationResult(0.0, pgrid, np.zeros(0, dtype=bool), np.zeros(n_bs))
    dist = np.linalg.norm(real.mt_xy[:, None, :] - real.bs_xy[None, :, :], axis=2)
    gain = np.maximum(dist, 1.0) ** (-cfg.path_alpha)
    serving = np.argmax(gain, axis=1)
    rows = np.arange(n_mt)
    mean_snr = cfg.p_tx_w * gain[rows, serving] / cfg.noise()

    if fading is None:
        if rng is None:
            raise ValueError("need fading matrix or rng")
        fading = rng.exponential(1.0, size=(n_mt, n_bs))
    received = cfg.p_tx_w * gain * np.asarray(fading, dtype=np.float64)
    wanted = received[rows, serving]
    interference = received.sum(axis=1) - wanted
    with np.errstate(divide="ignore"):
        sir = np.where(interference > 0.0, wanted / interference, np.inf)
    covered = (sir >= cfg.gamma_d) & (mean_snr >= cfg.gamma_a)

    cell_load = np.bincount(serving[covered], minlength=n_bs).astype(np.float64)
    n_active = int(np.sum(cell_load >= 1.0))
    per_mt_rate = np.zeros(n_mt)
    per_mt_rate[covered] = (
        cfg.bandwidth_hz / cell_load[serving[covered]] * np.log2(1.0 + cfg.gamma_d)
    )
    pse = float(np.sum(per_mt_rate)) / real.area_m2
    pgrid = (
        cfg.p_idle_w * (n_bs - n_active)
        + n_active * cfg.p_tx_w
        + cfg.p_circ_w * float(np.sum(cell_load))
    ) / real.area_m2
    return RealizationResult(pse=pse, pgrid=pgrid, covered=covered, cell_load=cell_load)


@dataclass
class EmpiricalEe:
    pse: float
    pgrid: float
    ee: float
    pse_samples: np.ndarray
    pgrid_samples: np.ndarray


def empirical_ee(cfg: CellularConfig, rng: np.random.Generator, n_realizations: int) -> EmpiricalEe:
    """Monte-Carlo estimate; EE is the ratio of the averaged estimates."""
    pses = np.empty(n_realizations)
    pgrids = np.empty(n_realizations)
    for i in range(n_realizations):
        real = realize_deployment(cfg, rng)
        out = evaluate_realization(cfg, real, rng=rng)
        pses[i] = out.pse
        pgrids[i] = out.pgrid
    pse = float(np.mean(pses))
    pgrid = float(np.mean(pgrids))
    ee = pse / pgrid if pgrid > 0.0 else 0.0
    return EmpiricalEe(pse=pse, pgrid=pgrid, ee=ee, pse_samples=pses, pgrid_samples=pgrids)


def cell_activity(x):
    """Probability that a typical cell serves at least one terminal."""
    return 1.0 - (1.0 + np.asarray(x, dtype=np.float64) / 3.5) ** (-3.5)


def interference_factor(gamma_d: float, alpha: float) -> float:
    """Coverage integral of the interference field for the SIR threshold."""
    x0 = gamma_d ** (-2.0 / alpha)
    val, _ = integrate.quad(lambda u: 1.0 / (1.0 + u ** (alpha / 2.0)), x0, np.inf)
    return gamma_d ** (2.0 / alpha) * val


@dataclass
class AnalyticEeModel:
    mt_density: float = 3e-5
    p_tx_w: float = 1.0
    p_circ_w: float = 1.0
    p_idle_w: float = 0.5
    gamma_d: float = 1.0
    bandwidth_hz: float = 1e6
    path_alpha: float = 4.0
    activity: object = None          # callable x -> probability, default cell_activity
    conditioning: object = None      # callable (lam_bs, p_tx, x) -> factor, default 1
    _upsilon: float = field(default=None, repr=False)

    def __post_init__(self):
        if self.activity is None:
            self.activity = cell_activity
        if self.conditioning is None:
            self.conditioning = lambda lam_bs, p_tx, x: 1.0
        if self._upsilon is None:
            self._upsilon = interference_factor(self.gamma_d, self.path_alpha)


def analytic_se(lam_bs, m: AnalyticEeModel):
    lam_bs = np.asarray(lam_bs, dtype=np.float64)
    x = m.mt_density / lam_bs
    act = m.activity(x)
    q = m.conditioning(lam_bs, m.p_tx_w, x)
    se = m.bandwidth_hz * np.log2(1.0 + m.gamma_d) * lam_bs * act / (1.0 + m._upsilon * act) * q
    return se if se.ndim else float(se)


def analytic_pgrid(lam_bs, m: AnalyticEeModel):
    lam_bs = np.asarray(lam_bs, dtype=np.float64)
    act = m.activity(m.mt_density / lam_bs)
    out = lam_bs * m.p_tx_w * act + m.mt_density * m.p_circ_w + lam_bs * m.p_idle_w * (1.0 - act)
    return out if out.ndim else float(out)


def analytic_ee(lam_bs, m: AnalyticEeModel):
    out = analytic_se(lam_bs, m) / analytic_pgrid(lam_bs, m)
    return out if np.ndim(out) else float(out)
