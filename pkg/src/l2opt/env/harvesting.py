"""Energy-harvesting point-to-point link with a finite battery.

A transmitter powered only by harvested energy sends over block-fading
channels.  Each slot it may spend at most the energy currently in the
battery, capped by the maximum transmit power; whatever is harvested
during the slot becomes available the slot after.
"""

import dataclasses

import numpy as np


@dataclasses.dataclass
class EhConfig:
    battery_capacity_j: float = 0.2
    p_max_w: float = 0.15
    slot_s: float = 1.0
    noise_w: float = 1e-3
    arrival_mean_j: float = 0.010
    arrival_std_j: float = 0.001


@dataclasses.dataclass
class EhEpisode:
    """One realized trace of channel gains and energy arrivals."""

    cfg: EhConfig
    gains: np.ndarray
    arrivals: np.ndarray
    battery0_j: float = 0.0

    @property
    def n_slots(self):
        return len(self.gains)


def eh_step(cfg, battery_j, gain, arrival_j, power_w):
    """Advance the battery one slot; returns (reward, next battery).

    The spent energy T*p must not exceed min(B, T*P_max); violations
    raise instead of being clipped so policy bugs surface loudly.
    The arrival lands after transmission and overflow is lost.
    """
    t = cfg.slot_s
    spend = t * power_w
    limit = min(battery_j, t * cfg.p_max_w)
    if spend < -1e-12 or spend > limit + 1e-12:
        raise ValueError(
            f"infeasible action: T*p={spend:.6g} outside [0, {limit:.6g}]"
        )
    reward = 0.0 if power_w == 0.0 else float(np.log1p(power_w * gain / cfg.noise_w))
    nxt = min(max(battery_j + arrival_j - spend, 0.0), cfg.battery_capacity_j)
    return reward, nxt


def sample_gains(cfg, n, rng):
    # i.i.d. block fading, unit-mean exponential power gains
    return rng.exponential(1.0, n)


def sample_arrivals(cfg, n, rng):
    """Non-negative truncated Gaussian arrivals, sampled by rejection."""
    out = np.empty(n)
    have = 0
    while have < n:
        draw = rng.normal(cfg.arrival_mean_j, cfg.arrival_std_j, n - have)
        keep = draw[draw >= 0.0]
        out[have:have + keep.size] = keep
        have += keep.size
    return out


def generate_episode(cfg, n_slots, rng, battery0_j=0.0):
    # draw order: gains first, then arrivals
    gains = sample_gains(cfg, n_slots, rng)
    arrivals = sample_arrivals(cfg, n_slots, rng)
    return EhEpisode(cfg=cfg, gains=gains, arrivals=arrivals, battery0_j=battery0_j)


def run_policy(episode, policy):
    """Step a causal policy(battery, gain) -> power through the episode.

    Returns (rewards, battery trace); the trace has one extra entry for
    the terminal battery.  Infeasible policy outputs propagate the
    eh_step error.
    """
    cfg = episode.cfg
    n = episode.n_slots
    rewards = np.empty(n)
    batteries = np.empty(n + 1)
    batteries[0] = episode.battery0_j
    b = episode.battery0_j
    for i in range(n):
        p = policy(b, episode.gains[i])
        rewards[i], b = eh_step(cfg, b, episode.gains[i], episode.arrivals[i], p)
        batteries[i + 1] = b
    return rewards, batteries
