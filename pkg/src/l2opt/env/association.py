"""Uplink massive MIMO rates for the user to base-station assignment problem.

Single-antenna users transmit to N-antenna base stations.  Channels follow a
local scattering model: the spatial correlation seen by a BS is the average of
steering outer products over a small angular interval around the user azimuth,
for a half-wavelength uniform linear array.  Per-(user, BS) uplink SINRs are
computed from one channel realization under MR or MMSE combining and turned
into spectral efficiencies d[k, m] = log2(1 + sinr).

An AssociationInstance bundles the rate matrix with per-BS capacities and
per-user rate floors; the assignment solvers consume it directly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .interference import default_ap_positions


@dataclass
class AssociationConfig:
    n_users: int = 6
    n_bs: int = 3
    n_antennas: int = 64
    area_m: float = 1000.0
    angular_spread_deg: float = 10.0
    combining: str = "mmse"          # or "mr"
    p_ul_w: float = 0.1              # 20 dBm
    noise_w: float = 10.0**-12.4     # -94 dBm
    capacity: int = 15
    quad_nodes: int = 48
    bs_positions_m: tuple | None = None


@dataclass
class AssociationInstance:
    rates: np.ndarray        # (K, M) spectral efficiencies, bits/s/Hz
    capacities: np.ndarray   # (M,) integer service limits
    floors: np.ndarray       # (K,) minimum served rate, 0 = best effort
    meta: dict = field(default_factory=dict)

    @property
    def n_users(self) -> int:
        return self.rates.shape[0]

    @property
    def n_bs(self) -> int:
        return self.rates.shape[1]


def steering(angles_rad: np.ndarray, n_antennas: int) -> np.ndarray:
    """Half-wavelength ULA response, one column per angle."""
    n = np.arange(n_antennas)[:, None]
    return np.exp(1j * np.pi * n * np.sin(np.asarray(angles_rad))[None, :])


def scattering_correlation(azimuth_rad: float, spread_rad: float, n_antennas: int,
                           quad_nodes: int = 48) -> np.ndarray:
    """Unit-diagonal spatial correlation for uniform local scattering.

    Gauss-Legendre average of steering outer products over the angular
    interval, which keeps the matrix positive semidefinite by construction.
    """
    nodes, weights = np.polynomial.legendre.leggauss(quad_nodes)
    theta = azimuth_rad + spread_rad * nodes
    a = steering(theta, n_antennas)  # (N, Q)
    c = (a * (weights / 2.0)) @ a.conj().T
    return c


def path_gain_db(distance_m) -> np.ndarray:
    d = np.maximum(np.asarray(distance_m, dtype=np.float64), 1.0)
    return -35.3 - 37.6 * np.log10(d)


def generate_association(
    cfg: AssociationConfig,
    rng: np.random.Generator,
    floors: np.ndarray | None = None,
    capacities: np.ndarray | None = None,
) -> AssociationInstance:
    """Drop users uniformly, draw correlated channels, compute the rate matrix."""
    k_users, m_bs, n_ant = cfg.n_users, cfg.n_bs, cfg.n_antennas
    bs_pos = (
        np.asarray(cfg.bs_positions_m, dtype=np.float64)
        if cfg.bs_positions_m is not None
        else default_ap_positions(m_bs, cfg.area_m)
    )
    ue_pos = rng.uniform(0.0, cfg.area_m, size=(k_users, 2))
    delta = ue_pos[:, None, :] - bs_pos[None, :, :]
    dist = np.linalg.norm(delta, axis=2)
    beta = 10.0 ** (path_gain_db(dist) / 10.0)
    azimuth = np.arctan2(delta[:, :, 1], delta[:, :, 0])
    spread = np.deg2rad(cfg.angular_spread_deg)

    channels = np.empty((m_bs, n_ant, k_users), dtype=complex)
    for k in range(k_users):
        for m in range(m_bs):
            c = scattering_correlation(azimuth[k, m], spread, n_ant, cfg.quad_nodes)
            root = np.linalg.cholesky(c + 1e-9 * np.eye(n_ant))
            z = (rng.standard_normal(n_ant) + 1j * rng.standard_normal(n_ant)) / np.sqrt(2.0)
            channels[m, :, k] = np.sqrt(beta[k, m]) * (root @ z)

    sinr = np.empty((k_users, m_bs))
    p, noise = cfg.p_ul_w, cfg.noise_w
    for m in range(m_bs):
        h = channels[m]  # (N, K)
        if cfg.combining == "mr":
            cross = np.abs(h.conj().T @ h) ** 2  # (K, K), |h_k^H h_j|^2
            norms = np.real(np.einsum("nk,nk->k", h.conj(), h))
            for k in range(k_users):
                interf = p * (np.sum(cross[k]) - cross[k, k])
                sinr[k, m] = p * cross[k, k] / (interf + noise * norms[k])
        elif cfg.combining == "mmse":
            gram = p * (h @ h.conj().T) + noise * np.eye(n_ant)
            for k in range(k_users):
                hk = h[:, k]
                a_k = gram - p * np.outer(hk, hk.conj())
                x = np.linalg.solve(a_k, hk)
                sinr[k, m] = p * np.real(np.vdot(hk, x))
        else:
            raise ValueError(f"unknown combining {cfg.combining!r}")

    rates = np.log2(1.0 + sinr)
    caps = (
        np.asarray(capacities, dtype=np.int64)
        if capacities is not None
        else np.full(m_bs, cfg.capacity, dtype=np.int64)
    )
    fl = np.asarray(floors, dtype=np.float64) if floors is not None else np.zeros(k_users)
    meta = {
        "ue_positions_m": ue_pos,
        "bs_positions_m": bs_pos,
        "sinr": sinr,
        "channels": channels,
    }
    return AssociationInstance(rates=rates, capacities=caps, floors=fl, meta=meta)
