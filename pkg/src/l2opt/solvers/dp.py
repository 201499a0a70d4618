"""Dynamic-programming baselines for the energy-harvesting link.

Two solvers: value iteration on a discretized battery/channel MDP with
known (empirically quantized) process statistics, and a non-causal
finite-horizon DP over a realized trace that upper-bounds every causal
policy on the same discretization.
"""

import dataclasses

import numpy as np

from ..env.harvesting import sample_arrivals, sample_gains


@dataclasses.dataclass
class Quantization:
    """Equiprobable-bin quantizer: bin means as levels, quantile edges."""

    values: np.ndarray
    probs: np.ndarray
    edges: np.ndarray

    def bin_index(self, x):
        return np.searchsorted(self.edges, x, side="right")


def quantize_samples(samples, n_bins):
    samples = np.sort(np.asarray(samples, dtype=float))
    edges = np.quantile(samples, np.arange(1, n_bins) / n_bins)
    idx = np.searchsorted(edges, samples, side="right")
    counts = np.bincount(idx, minlength=n_bins).astype(float)
    sums = np.bincount(idx, weights=samples, minlength=n_bins)
    values = sums / np.maximum(counts, 1.0)
    if len(edges):
        # degenerate ties can empty a bin; park its level on an edge,
        # the zero mass keeps it out of every expectation
        pad = np.concatenate([[edges[0]], edges])
        values = np.where(counts > 0, values, pad)
    probs = counts / counts.sum()
    return Quantization(values=values, probs=probs, edges=edges)


def power_grid(p_max_w, step):
    # includes both endpoints when step divides p_max
    return np.arange(0.0, p_max_w + 0.5 * step, step)


@dataclasses.dataclass
class MdpSolution:
    cfg: object
    battery_grid: np.ndarray
    powers: np.ndarray
    channel: Quantization
    arrival: Quantization
    discount: float
    values: np.ndarray
    policy: np.ndarray
    diffs: np.ndarray

    def policy_fn(self):
        """Causal policy (battery, gain) -> power, always feasible."""
        cfg = self.cfg
        n_b = len(self.battery_grid)
        scale = (n_b - 1) / cfg.battery_capacity_j

        def act(battery, gain):
            ib = int(round(battery * scale))
            ig = int(self.channel.bin_index(gain))
            p = self.powers[self.policy[ib, ig]]
            return min(p, battery / cfg.slot_s, cfg.p_max_w)

        return act


def mdp_value_iteration(cfg, n_battery=200, n_channel=10, n_arrival=10,
                        power_step=1e-2, discount=0.99, tol=1e-6,
                        max_iter=20000, channel_q=None, arrival_q=None,
                        quant_seed=20, quant_samples=100_000):
    """Value iteration for the harvesting MDP on known statistics.

    Channel and arrival processes are quantized into equiprobable bins
    from a fixed-seed Monte-Carlo sample unless quantizers are passed
    in.  Next-slot batteries snap to the nearest grid level.
    """
    if channel_q is None or arrival_q is None:
        rng = np.random.default_rng(quant_seed)
        if channel_q is None:
            channel_q = quantize_samples(sample_gains(cfg, quant_samples, rng), n_channel)
        if arrival_q is None:
            arrival_q = quantize_samples(sample_arrivals(cfg, quant_samples, rng), n_arrival)

    b_grid = np.linspace(0.0, cfg.battery_capacity_j, n_battery)
    powers = power_grid(cfg.p_max_w, power_step)
    t = cfg.slot_s
    n_b, n_a = len(b_grid), len(powers)
    n_g, n_e = len(channel_q.values), len(arrival_q.values)

    feasible = t * powers[None, :] <= np.minimum(b_grid, t * cfg.p_max_w)[:, None] + 1e-12
    rewards = np.log1p(powers[:, None] * channel_q.values[None, :] / cfg.noise_w)

    b_next = b_grid[:, None, None] + arrival_q.values[None, None, :] - t * powers[None, :, None]
    b_next = np.clip(b_next, 0.0, cfg.battery_capacity_j)
    nb_idx = np.rint(b_next / cfg.battery_capacity_j * (n_b - 1)).astype(np.int64)
    e_probs = arrival_q.probs

    def q_table(values):
        # q[b, g, a] = r(a, g) + gamma * E_{e, g'} V(b'(b, a, e), g')
        v_bar = values @ channel_q.probs
        ev = np.einsum("bae,e->ba", v_bar[nb_idx], e_probs)
        q = rewards.T[None, :, :] + discount * ev[:, None, :]
        return np.where(feasible[:, None, :], q, -np.inf)

    values = np.zeros((n_b, n_g))
    diffs = []
    for _ in range(max_iter):
        new_values = q_table(values).max(axis=2)
        diff = np.abs(new_values - values).max()
        diffs.append(diff)
        values = new_values
        if diff < tol:
            break
    else:
        raise RuntimeError("value iteration did not converge")

    policy = q_table(values).argmax(axis=2)

    return MdpSolution(cfg=cfg, battery_grid=b_grid, powers=powers,
                       channel=channel_q, arrival=arrival_q, discount=discount,
                       values=values, policy=policy, diffs=np.asarray(diffs))


@dataclasses.dataclass
class OfflineSolution:
    average_rate: float
    total_reward: float
    powers: np.ndarray
    batteries: np.ndarray


def offline_upper_bound(episode, powers=None, power_step=1e-3, battery_step=1e-4):
    """Non-causal DP over the realized trace; bound, not a policy.

    Batteries live on a fine grid and every transition rounds up, so
    the DP never has less energy than the continuous recursion and its
    total reward upper-bounds any causal policy restricted to the same
    action grid.  The default grid includes P_max.
    """
    cfg = episode.cfg
    if powers is None:
        powers = power_grid(cfg.p_max_w, power_step)
    t = cfg.slot_s
    n = episode.n_slots
    n_b = int(np.ceil(cfg.battery_capacity_j / battery_step - 1e-9)) + 1
    b_grid = np.arange(n_b) * battery_step

    def up(b):
        # eps guard keeps exact grid multiples in place despite float noise
        return np.clip(np.ceil(b / battery_step - 1e-9), 0, n_b - 1).astype(np.int64)

    feasible = t * powers[None, :] <= np.minimum(b_grid, t * cfg.p_max_w)[:, None] + 1e-12
    drained = b_grid[:, None] - t * powers[None, :]

    value = np.zeros(n_b)
    best = np.empty((n, n_b), dtype=np.int16)
    for i in range(n - 1, -1, -1):
        r = np.log1p(powers * episode.gains[i] / cfg.noise_w)
        nxt = up(np.minimum(np.maximum(drained + episode.arrivals[i], 0.0),
                            cfg.battery_capacity_j))
        q = np.where(feasible, r[None, :] + value[nxt], -np.inf)
        best[i] = q.argmax(axis=1)
        value = q.max(axis=1)

    batteries = np.empty(n + 1)
    chosen = np.empty(n)
    ib = int(up(episode.battery0_j))
    batteries[0] = b_grid[ib]
    total = 0.0
    for i in range(n):
        a = best[i, ib]
        p = powers[a]
        chosen[i] = p
        total += float(np.log1p(p * episode.gains[i] / cfg.noise_w))
        ib = int(up(min(max(b_grid[ib] - t * p + episode.arrivals[i], 0.0),
                        cfg.battery_capacity_j)))
        batteries[i + 1] = b_grid[ib]
    return OfflineSolution(average_rate=total / n, total_reward=total,
                           powers=chosen, batteries=batteries)
