"""Online Q-learning loop with replay, target network, and masked targets."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..env.harvesting import EhConfig, eh_step, generate_episode, sample_arrivals, sample_gains
from ..nn import engine
from ..train.optim import LrSchedule, make_optimizer
from .agent import DqnAgent, DqnConfig, ReplayBuffer, select_action
from .evaluate import greedy_policy, rollout


@dataclass
class TrainTrace:
    rewards: np.ndarray     # per-slot reward actually collected
    powers: np.ndarray      # per-slot transmit power executed
    max_q: np.ndarray       # running max |Q| on replay batches (nan before updates)
    updates: int
    seed: int
    probes: np.ndarray | None = None    # (slot, greedy probe rate) rows
    best_slot: int | None = None        # slot whose snapshot was kept


def epsilon_at(step: int, n_slots: int, dqn: DqnConfig) -> float:
    decay_steps = max(1, int(dqn.eps_frac * n_slots))
    frac = min(step / decay_steps, 1.0)
    return dqn.eps0 + (dqn.eps_min - dqn.eps0) * frac


def rolling_mean(x: np.ndarray, window: int) -> np.ndarray:
    """Trailing mean over the last ``window`` entries, shorter at the start."""
    c = np.concatenate([[0.0], np.cumsum(x)])
    n = len(x)
    idx = np.arange(1, n + 1)
    lo = np.maximum(idx - window, 0)
    return (c[idx] - c[lo]) / (idx - lo)


def dqn_train(
    cfg: EhConfig,
    dqn: DqnConfig,
    n_slots: int,
    seed: int,
    battery0_j: float = 0.0,
    gains: np.ndarray | None = None,
    arrivals: np.ndarray | None = None,
    probe_every: int = 1000,
    probe_slots: int = 2000,
    probe_episodes: int = 4,
    tail_average: int = 0,
    episode_slots: int | None = 2000,
):
    """Interact, store, and regress for ``n_slots`` slots; returns (agent, trace).

    Per slot one epsilon-greedy action is executed and one mini-batch
    regression step is taken (once the buffer holds a batch), fitting
    Q(s, a) toward r * reward_scale + gamma * max over feasible a' of
    the target net's Q(s', a').  The target net is refreshed every
    ``target_sync`` updates.  The battery resets to ``battery0_j``
    every ``episode_slots`` slots (None trains one continuous run), so
    the visited states keep covering the ramp-up band that fresh
    episodes traverse; boundary transitions are not stored.  Every
    ``probe_every`` slots the greedy policy is scored on fixed held-out
    episodes and the best-scoring snapshot is restored at the end, like
    the supervised trainer's best-validation restore; ``tail_average``
    > 1 instead averages the weights of that many final probe-time
    snapshots.  Everything is drawn from one generator, so a (seed,
    config) pair fixes the whole run.  ``gains``/``arrivals`` override
    the sampled processes (length n_slots + 1 and n_slots) for
    controlled tests; overriding them also disables probing, since the
    probe episodes would follow the config's own processes instead.
    """
    rng = np.random.default_rng(seed)
    agent = DqnAgent.fresh(cfg, dqn, rng)
    controlled = gains is not None or arrivals is not None
    if gains is None:
        gains = sample_gains(cfg, n_slots + 1, rng)
    if arrivals is None:
        arrivals = sample_arrivals(cfg, n_slots, rng)
    if len(gains) < n_slots + 1 or len(arrivals) < n_slots:
        raise ValueError("need n_slots+1 gains and n_slots arrivals")

    probe_eps = None
    if probe_every and not controlled:
        prng = np.random.default_rng([seed, 1])
        probe_eps = [generate_episode(cfg, probe_slots, prng)
                     for _ in range(probe_episodes)]

    buffer = ReplayBuffer(dqn.buffer_capacity)
    params = agent.q_net.trainable_arrays()
    opt = make_optimizer("adam")
    schedule = LrSchedule(dqn.lr, steps=n_slots if dqn.lr_steps is None else dqn.lr_steps,
                          alpha_final=dqn.lr_final)

    rewards = np.empty(n_slots)
    powers = np.empty(n_slots)
    max_q = np.full(n_slots, np.nan)
    updates = 0
    battery = battery0_j
    e_prev = 0.0
    probes = []
    snaps = []
    best = None

    def probe(slot):
        nonlocal best
        pol = greedy_policy(agent)
        rate = float(np.mean([np.mean(rollout(ep, pol)) for ep in probe_eps]))
        probes.append((slot, rate))
        if tail_average > 1:
            snaps.append(agent.q_net.snapshot())
        if best is None or rate >= best[1]:
            best = (slot, rate, agent.q_net.snapshot())

    for i in range(n_slots):
        eps = epsilon_at(i, n_slots, dqn)
        state = agent.state(battery, gains[i], e_prev)
        a = select_action(agent, battery, gains[i], e_prev, rng, eps)
        rewards[i], nxt = eh_step(cfg, battery, gains[i], arrivals[i],
                                  agent.powers[a])
        powers[i] = agent.powers[a]
        if episode_slots is not None and (i + 1) % episode_slots == 0:
            battery, e_prev = battery0_j, 0.0
        else:
            next_state = agent.state(nxt, gains[i + 1], arrivals[i])
            buffer.push(state, a, rewards[i], next_state)
            battery, e_prev = nxt, arrivals[i]

        if probe_eps is not None and (i + 1) % probe_every == 0:
            probe(i + 1)
        if len(buffer) < dqn.batch_size:
            continue
        bs, ba, br, bs2 = buffer.sample(rng, dqn.batch_size)
        q_next = agent.target_values(bs2)
        feas = agent.feasible_batch(bs2)
        best_next = np.where(feas, q_next, -np.inf).max(axis=1)
        pred = agent.q_values(bs)
        max_q[i] = float(np.abs(pred).max())
        targets = pred.copy()
        targets[np.arange(len(ba)), ba] = br * dqn.reward_scale + dqn.gamma * best_next
        shift = opt.grad_shift(params)
        if shift is None:
            grads, _ = engine.batch_gradient(agent.q_net, bs, targets, "mse")
        else:
            saved = [p.copy() for p in params]
            for p, s in zip(params, shift):
                p += s
            grads, _ = engine.batch_gradient(agent.q_net, bs, targets, "mse")
            for p, s in zip(params, saved):
                p[:] = s
        opt.step(params, grads, schedule.value(i))
        updates += 1
        if updates % dqn.target_sync == 0:
            agent.sync()

    best_slot = None
    trace_probes = None
    if probe_eps is not None:
        if best is None or n_slots % probe_every != 0:
            probe(n_slots)
        if tail_average > 1:
            tail = snaps[-tail_average:]
            agent.q_net.restore([np.mean([s[j] for s in tail], axis=0)
                                 for j in range(len(tail[0]))])
            best_slot = int(probes[len(snaps) - len(tail)][0])
        else:
            agent.q_net.restore(best[2])
            best_slot = best[0]
        agent.sync()
        trace_probes = np.asarray(probes)

    return agent, TrainTrace(rewards=rewards, powers=powers, max_q=max_q,
                             updates=updates, seed=seed,
                             probes=trace_probes, best_slot=best_slot)


def dqn_train_select(
    cfg: EhConfig,
    dqn: DqnConfig,
    n_slots: int,
    seed: int,
    attempts: int = 4,
    threshold: float | None = None,
    val_episodes: int = 5,
    val_slots: int = 2000,
    **train_kw,
):
    """Train up to ``attempts`` agents and keep the best on validation.

    Candidates run with seeds 1000*seed + c and are scored by greedy
    average rate on a shared validation set (drawn from [seed, 2], so
    disjoint from every candidate's training and probe streams); the
    loop stops early once a candidate reaches ``threshold``.  Returns
    (agent, trace, info) for the winner, with every candidate's
    validation rate in info["val_rates"].
    """
    if attempts < 1:
        raise ValueError("need at least one attempt")
    vrng = np.random.default_rng([seed, 2])
    val_eps = [generate_episode(cfg, val_slots, vrng) for _ in range(val_episodes)]

    best = None
    val_rates = []
    for c in range(attempts):
        agent, trace = dqn_train(cfg, dqn, n_slots, 1000 * seed + c, **train_kw)
        pol = greedy_policy(agent)
        rate = float(np.mean([np.mean(rollout(ep, pol)) for ep in val_eps]))
        val_rates.append(rate)
        if best is None or rate > best[0]:
            best = (rate, agent, trace)
        if threshold is not None and rate >= threshold:
            break
    rate, agent, trace = best
    return agent, trace, {"val_rates": val_rates, "val_rate": rate,
                          "chosen": int(np.argmax(val_rates))}
