"""Multi-user interference network with weighted sum energy efficiency.

K single-antenna transmitters send to multi-antenna access points.  Receive
filters are MMSE filters computed once at full transmit power and then held
fixed, which reduces the physical layer to an effective K x K gain matrix
d[k, j] = |c_k^H h_{j, m_k}|^2.  The weighted sum energy efficiency of a power
vector p is

    WSEE(p) = sum_k w_k * B * log2(1 + g_k(p)) / (Pc_k + mu_k * p_k)

with g_k(p) = p_k d[k,k] / (noise + sum_{j!=k} p_j d[k,j]), in bit/Joule.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0


@dataclass
class InterferenceConfig:
    n_users: int = 4
    n_aps: int = 4
    n_antennas: int = 2
    area_m: float = 2000.0
    carrier_hz: float = 1.8e9
    decay: float = 4.5
    bandwidth_hz: float = 180e3
    noise_figure_db: float = 3.0
    noise_density_dbm_hz: float = -174.0
    weight: float = 1.0
    static_power_w: float = 1.0
    power_scale: float = 4.0
    p_min_w: float = 0.0
    p_max_w: float = 1.0
    ap_positions_m: tuple | None = None


@dataclass
class InterferenceScenario:
    gains: np.ndarray          # (K, K) effective gains d[k, j]
    noise_w: float
    weights: np.ndarray        # (K,)
    static_power_w: np.ndarray
    power_scale: np.ndarray
    p_min_w: np.ndarray
    p_max_w: np.ndarray
    bandwidth_hz: float
    meta: dict = field(default_factory=dict)

    @property
    def n_users(self) -> int:
        return self.gains.shape[0]

    def to_doc(self) -> dict:
        doc = {
            "format": "l2opt-scenario",
            "version": 1,
            "gains": self.gains.tolist(),
            "noise_w": self.noise_w,
            "weights": self.weights.tolist(),
            "static_power_w": self.static_power_w.tolist(),
            "power_scale": self.power_scale.tolist(),
            "p_min_w": self.p_min_w.tolist(),
            "p_max_w": self.p_max_w.tolist(),
            "bandwidth_hz": self.bandwidth_hz,
        }
        for key in ("ue_positions_m", "ap_positions_m", "serving_ap"):
            if key in self.meta:
                doc[key] = np.asarray(self.meta[key]).tolist()
        return doc

    @classmethod
    def from_doc(cls, doc: dict) -> "InterferenceScenario":
        if doc.get("format") != "l2opt-scenario" or doc.get("version") != 1:
            raise ValueError("not a scenario document")
        meta = {
            k: np.asarray(doc[k])
            for k in ("ue_positions_m", "ap_positions_m", "serving_ap")
            if k in doc
        }
        return cls(
            gains=np.asarray(doc["gains"], dtype=np.float64),
            noise_w=float(doc["noise_w"]),
            weights=np.asarray(doc["weights"], dtype=np.float64),
            static_power_w=np.asarray(doc["static_power_w"], dtype=np.float64),
            power_scale=np.asarray(doc["power_scale"], dtype=np.float64),
            p_min_w=np.asarray(doc["p_min_w"], dtype=np.float64),
            p_max_w=np.asarray(doc["p_max_w"], dtype=np.float64),
            bandwidth_hz=float(doc["bandwidth_hz"]),
            meta=meta,
        )


def noise_power_w(cfg: InterferenceConfig) -> float:
    """Thermal noise over the signal bandwidth plus the receiver noise figure."""
    dbm = cfg.noise_density_dbm_hz + 10.0 * np.log10(cfg.bandwidth_hz) + cfg.noise_figure_db
    return 10.0 ** (dbm / 10.0) * 1e-3


def path_gain(distance_m, cfg: InterferenceConfig):
    """Linear power gain: free-space intercept at 1 m, then decay-law falloff."""
    d = np.maximum(np.asarray(distance_m, dtype=np.float64), 1.0)
    intercept_db = 20.0 * np.log10(4.0 * np.pi * cfg.carrier_hz / SPEED_OF_LIGHT)
    pl_db = intercept_db + 10.0 * cfg.decay * np.log10(d)
    return 10.0 ** (-pl_db / 10.0)


def default_ap_positions(n_aps: int, area_m: float) -> np.ndarray:
    if n_aps == 1:
        frac = np.array([[0.5, 0.5]])
    elif n_aps == 2:
        frac = np.array([[0.25, 0.5], [0.75, 0.5]])
    elif n_aps == 4:
        frac = np.array([[0.25, 0.25], [0.25, 0.75], [0.75, 0.25], [0.75, 0.75]])
    else:
        side = int(np.ceil(np.sqrt(n_aps)))
        pts = [( (i + 0.5) / side, (j + 0.5) / side) for i in range(side) for j in range(side)]
        frac = np.array(pts[:n_aps])
    return frac * area_m


def generate_scenario(
    cfg: InterferenceConfig,
    rng: np.random.Generator,
    p_max_w: float | np.ndarray | None = None,
) -> InterferenceScenario:
    """Draw a random scenario: uniform UE drops, i.i.d. Rayleigh fading per antenna.

    Each UE associates with the access point where its channel norm is largest;
    the MMSE receive filter for every UE is computed at full power and kept.
    ``p_max_w`` overrides the config ceiling (scalar or per-user).
    """
    k_users = cfg.n_users
    ap_pos = (
        np.asarray(cfg.ap_positions_m, dtype=np.float64)
        if cfg.ap_positions_m is not None
        else default_ap_positions(cfg.n_aps, cfg.area_m)
    )
    if ap_pos.shape != (cfg.n_aps, 2):
        raise ValueError("ap_positions_m must have shape (n_aps, 2)")
    ue_pos = rng.uniform(0.0, cfg.area_m, size=(k_users, 2))
    dist = np.linalg.norm(ue_pos[:, None, :] - ap_pos[None, :, :], axis=2)
    large = path_gain(dist, cfg)  # (K, M)

    # channels h[k, m] in C^{n_antennas}
    shape = (k_users, cfg.n_aps, cfg.n_antennas)
    fading = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    channels = np.sqrt(large)[:, :, None] * fading

    norms = np.sum(np.abs(channels) ** 2, axis=2)  # (K, M)
    serving = np.argmax(norms, axis=1)

    noise = noise_power_w(cfg)
    p_max = np.broadcast_to(
        np.asarray(cfg.p_max_w if p_max_w is None else p_max_w, dtype=np.float64), (k_users,)
    ).copy()
    p_min = np.full(k_users, cfg.p_min_w)
    if np.any(p_min > p_max):
        raise ValueError("p_min_w exceeds p_max_w")

    gains = np.empty((k_users, k_users))
    filters = []
    for k in range(k_users):
        h_at = channels[:, serving[k], :]  # (K, n_ant): all users into AP m_k
        cov = noise * np.eye(cfg.n_antennas, dtype=complex)
        cov += (p_max[:, None, None] * (h_at[:, :, None] * h_at[:, None, :].conj())).sum(axis=0)
        c = np.linalg.solve(cov, h_at[k])
        c /= np.linalg.norm(c)  # unit norm keeps the reduced noise term at noise_w
        filters.append(c)
        gains[k, :] = np.abs(h_at @ c.conj()) ** 2
    meta = {
        "ue_positions_m": ue_pos,
        "ap_positions_m": ap_pos,
        "serving_ap": serving,
        "channel_norms": norms,
        "channels": channels,
        "filters": filters,
    }
    return InterferenceScenario(
        gains=gains,
        noise_w=noise,
        weights=np.full(k_users, cfg.weight),
        static_power_w=np.full(k_users, cfg.static_power_w),
        power_scale=np.full(k_users, cfg.power_scale),
        p_min_w=p_min,
        p_max_w=p_max,
        bandwidth_hz=cfg.bandwidth_hz,
        meta=meta,
    )


def sinr(s: InterferenceScenario, p) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    signal = p * np.diag(s.gains)
    interference = s.gains @ p - np.diag(s.gains) * p
    return signal / (s.noise_w + interference)


def wsee_terms(s: InterferenceScenario, p) -> np.ndarray:
    """Per-user energy efficiencies w_k * rate_k / power_k in bit/Joule."""
    p = np.asarray(p, dtype=np.float64)
    rates = s.weights * s.bandwidth_hz * np.log2(1.0 + sinr(s, p))
    return rates / (s.static_power_w + s.power_scale * p)


def wsee(s: InterferenceScenario, p) -> float:
    return float(np.sum(wsee_terms(s, p)))


def wsee_batch(s: InterferenceScenario, P: np.ndarray) -> np.ndarray:
    """WSEE for many power vectors at once; P has shape (n, K)."""
    P = np.asarray(P, dtype=np.float64)
    diag = np.diag(s.gains)
    off = s.gains - np.diag(diag)
    interference = P @ off.T
    gamma = (P * diag) / (s.noise_w + interference)
    rates = s.weights * s.bandwidth_hz * np.log2(1.0 + gamma)
    return np.sum(rates / (s.static_power_w + s.power_scale * P), axis=1)
