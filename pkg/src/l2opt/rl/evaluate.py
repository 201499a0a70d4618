"""Causal policy rollouts and the comparison table against DP baselines."""
from __future__ import annotations

import numpy as np

from ..env.harvesting import EhEpisode, eh_step
from ..solvers.dp import MdpSolution, offline_upper_bound
from .agent import DqnAgent, select_action

_NO_RNG = np.random.default_rng(0)  # greedy selection never consumes draws


def rollout(episode: EhEpisode, policy) -> np.ndarray:
    """Step ``policy(battery, gain, last_arrival) -> power`` through a trace."""
    cfg = episode.cfg
    rewards = np.empty(episode.n_slots)
    battery, e_prev = episode.battery0_j, 0.0
    for i in range(episode.n_slots):
        p = policy(battery, episode.gains[i], e_prev)
        rewards[i], battery = eh_step(cfg, battery, episode.gains[i],
                                      episode.arrivals[i], p)
        e_prev = episode.arrivals[i]
    return rewards


def greedy_policy(agent: DqnAgent):
    def act(battery, gain, last_arrival):
        idx = select_action(agent, battery, gain, last_arrival, _NO_RNG, 0.0)
        return agent.powers[idx]

    return act


def random_policy(agent: DqnAgent, rng: np.random.Generator):
    """Uniform over the feasible grid each slot; the untrained reference."""

    def act(battery, gain, last_arrival):
        feas = np.flatnonzero(agent.feasible(battery))
        return agent.powers[feas[rng.integers(len(feas))]]

    return act


def mdp_policy(sol: MdpSolution):
    inner = sol.policy_fn()

    def act(battery, gain, last_arrival):
        return inner(battery, gain)

    return act


def evaluate_policies(episodes, policies: dict, offline: bool = True) -> dict:
    """Average per-slot rate of each causal policy on shared traces.

    The non-causal DP bound on the same traces anchors the percentage
    column; every policy sees identical gains and arrivals.
    """
    if not episodes:
        raise ValueError("need at least one evaluation episode")
    per_episode = {name: np.empty(len(episodes)) for name in policies}
    bound = np.empty(len(episodes))
    for i, ep in enumerate(episodes):
        for name, pol in policies.items():
            per_episode[name][i] = float(np.mean(rollout(ep, pol)))
        if offline:
            bound[i] = offline_upper_bound(ep).average_rate

    out = {"policies": {}, "per_episode": per_episode, "n_episodes": len(episodes)}
    if offline:
        out["offline"] = float(np.mean(bound))
        out["per_episode"] = {**per_episode, "offline": bound}
    for name in policies:
        rate = float(np.mean(per_episode[name]))
        row = {"rate": rate}
        if offline:
            row["pct_of_offline"] = 100.0 * rate / out["offline"]
        out["policies"][name] = row
    return out
