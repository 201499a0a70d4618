"""Q-network agent over a discretized transmit-power grid.

The agent sees a 3-wide normalized state (battery fill, channel gain
over its mean, previous arrival over its mean) and scores one discrete
power level per output neuron.  Actions whose energy draw exceeds the
battery are masked out of every argmax, so the executed policy is
feasible by construction.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

import numpy as np

from ..env.harvesting import EhConfig
from ..nn import engine
from ..nn.network import Network
from ..train.initializers import glorot_network


@dataclass
class DqnConfig:
    gamma: float = 0.99
    action_step_w: float = 1e-3
    hidden: tuple = (60, 60, 58, 58, 56, 56, 54, 54, 52, 52)
    buffer_capacity: int = 100_000
    batch_size: int = 64
    target_sync: int = 500
    eps0: float = 1.0
    eps_min: float = 0.05
    eps_frac: float = 0.2       # portion of the run spent decaying epsilon
    lr: float = 5e-4
    lr_final: float = 5e-6
    lr_steps: int | None = None     # decay horizon in updates; None spans the run
    # rewards enter the regression multiplied by this, so Q-values live
    # near the per-slot reward scale instead of reward/(1-gamma); the
    # greedy argmax is invariant to the common factor
    reward_scale: float = 1e-2


def action_grid(p_max_w: float, step: float = 1e-3) -> np.ndarray:
    """Power levels {0, step, 2*step, ...} strictly below p_max + step."""
    n = int(round(p_max_w / step))
    return np.arange(n) * step


def dqn_network(n_actions: int, hidden, rng: np.random.Generator) -> Network:
    widths = list(hidden) + [n_actions]
    acts = ["relu"] * len(hidden) + ["linear"]
    return glorot_network(3, widths, acts, rng)


class ReplayBuffer:
    """Fixed-capacity ring of (state, action, reward, next state) rows."""

    def __init__(self, capacity: int, state_dim: int = 3):
        self.capacity = int(capacity)
        self.states = np.empty((self.capacity, state_dim))
        self.actions = np.empty(self.capacity, dtype=np.int64)
        self.rewards = np.empty(self.capacity)
        self.next_states = np.empty((self.capacity, state_dim))
        self.size = 0
        self.pos = 0

    def __len__(self) -> int:
        return self.size

    def push(self, state, action, reward, next_state) -> None:
        i = self.pos
        self.states[i] = state
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_states[i] = next_state
        self.pos = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, rng: np.random.Generator, n: int):
        idx = rng.integers(0, self.size, n)
        return (self.states[idx], self.actions[idx],
                self.rewards[idx], self.next_states[idx])


@dataclass
class DqnAgent:
    cfg: EhConfig
    dqn: DqnConfig
    q_net: Network
    target_net: Network
    powers: np.ndarray
    e_scale: float
    g_scale: float = 1.0

    @classmethod
    def fresh(cls, cfg: EhConfig, dqn: DqnConfig, rng: np.random.Generator):
        powers = action_grid(cfg.p_max_w, dqn.action_step_w)
        q_net = dqn_network(len(powers), dqn.hidden, rng)
        target_net = Network.from_doc(q_net.to_doc())
        return cls(cfg=cfg, dqn=dqn, q_net=q_net, target_net=target_net,
                   powers=powers, e_scale=cfg.arrival_mean_j)

    @property
    def n_actions(self) -> int:
        return len(self.powers)

    def state(self, battery_j: float, gain: float, last_arrival_j: float) -> np.ndarray:
        return np.array([battery_j / self.cfg.battery_capacity_j,
                         gain / self.g_scale,
                         last_arrival_j / self.e_scale])

    def feasible(self, battery_j: float) -> np.ndarray:
        limit = min(battery_j, self.cfg.slot_s * self.cfg.p_max_w)
        return self.cfg.slot_s * self.powers <= limit + 1e-12

    def feasible_batch(self, states: np.ndarray) -> np.ndarray:
        batteries = states[:, 0] * self.cfg.battery_capacity_j
        limit = np.minimum(batteries, self.cfg.slot_s * self.cfg.p_max_w)
        return self.cfg.slot_s * self.powers[None, :] <= limit[:, None] + 1e-12

    def q_values(self, states: np.ndarray) -> np.ndarray:
        return engine.forward(self.q_net, np.atleast_2d(states))

    def target_values(self, states: np.ndarray) -> np.ndarray:
        return engine.forward(self.target_net, np.atleast_2d(states))

    def sync(self) -> None:
        self.target_net.restore(self.q_net.snapshot())

    def save(self, path) -> None:
        doc = {
            "format": "l2opt-dqn",
            "version": 1,
            "env": dataclasses.asdict(self.cfg),
            "dqn": dataclasses.asdict(self.dqn),
            "e_scale": self.e_scale,
            "g_scale": self.g_scale,
            "network": self.q_net.to_doc(),
        }
        with open(path, "w") as fh:
            json.dump(doc, fh)

    @classmethod
    def load(cls, path) -> "DqnAgent":
        with open(path) as fh:
            doc = json.load(fh)
        if doc.get("format") != "l2opt-dqn":
            raise ValueError("not an agent checkpoint")
        dqn_doc = dict(doc["dqn"])
        dqn_doc["hidden"] = tuple(dqn_doc["hidden"])
        cfg = EhConfig(**doc["env"])
        dqn = DqnConfig(**dqn_doc)
        q_net = Network.from_doc(doc["network"])
        target_net = Network.from_doc(doc["network"])
        return cls(cfg=cfg, dqn=dqn, q_net=q_net, target_net=target_net,
                   powers=action_grid(cfg.p_max_w, dqn.action_step_w),
                   e_scale=float(doc["e_scale"]), g_scale=float(doc["g_scale"]))


def select_action(agent: DqnAgent, battery_j: float, gain: float,
                  last_arrival_j: float, rng: np.random.Generator,
                  eps: float) -> int:
    """Feasibility-masked epsilon-greedy pick; ties go to the lowest index."""
    mask = agent.feasible(battery_j)
    if eps > 0.0 and rng.random() < eps:
        feas = np.flatnonzero(mask)
        return int(feas[rng.integers(len(feas))])
    q = agent.q_values(agent.state(battery_j, gain, last_arrival_j))[0]
    return int(np.argmax(np.where(mask, q, -np.inf)))
