import numpy as np
import pytest

from l2opt.env.harvesting import (
    EhConfig,
    EhEpisode,
    eh_step,
    generate_episode,
    run_policy,
    sample_arrivals,
    sample_gains,
)


class TestEhStep:
    def test_battery_update(self):
        cfg = EhConfig()
        _, nxt = eh_step(cfg, 0.1, 1.0, 0.05, 0.02)
        assert nxt == pytest.approx(0.13, abs=1e-15)

    def test_overflow_clamps_to_capacity(self):
        cfg = EhConfig()
        _, nxt = eh_step(cfg, 0.19, 1.0, 0.05, 0.0)
        assert nxt == 0.2

    def test_zero_power_zero_reward(self):
        cfg = EhConfig()
        r, _ = eh_step(cfg, 0.1, 3.7, 0.01, 0.0)
        assert r == 0.0

    def test_reward_formula(self):
        cfg = EhConfig(noise_w=1e-3)
        r, _ = eh_step(cfg, 0.1, 2.0, 0.0, 0.01)
        assert r == pytest.approx(np.log(1.0 + 0.01 * 2.0 / 1e-3), rel=1e-12)

    def test_spending_battery_exactly_is_feasible(self):
        cfg = EhConfig()
        _, nxt = eh_step(cfg, 0.05, 1.0, 0.0, 0.05)
        assert nxt == 0.0

    def test_overdraw_rejected(self):
        cfg = EhConfig()
        with pytest.raises(ValueError):
            eh_step(cfg, 0.05, 1.0, 0.0, 0.06)

    def test_power_cap_rejected(self):
        cfg = EhConfig(p_max_w=0.15)
        with pytest.raises(ValueError):
            eh_step(cfg, 0.2, 1.0, 0.0, 0.16)

    def test_negative_power_rejected(self):
        cfg = EhConfig()
        with pytest.raises(ValueError):
            eh_step(cfg, 0.1, 1.0, 0.0, -0.01)

    def test_empty_battery_only_idles(self):
        cfg = EhConfig()
        with pytest.raises(ValueError):
            eh_step(cfg, 0.0, 1.0, 0.0, 0.001)
        r, nxt = eh_step(cfg, 0.0, 1.0, 0.03, 0.0)
        assert r == 0.0 and nxt == pytest.approx(0.03)

    def test_slot_duration_scales_energy(self):
        # T=2 s halves the feasible power for a given battery
        cfg = EhConfig(slot_s=2.0)
        _, nxt = eh_step(cfg, 0.1, 1.0, 0.0, 0.05)
        assert nxt == 0.0
        with pytest.raises(ValueError):
            eh_step(cfg, 0.1, 1.0, 0.0, 0.051)


class TestSampling:
    def test_arrivals_nonnegative(self):
        cfg = EhConfig(arrival_mean_j=0.001, arrival_std_j=0.01)
        e = sample_arrivals(cfg, 20_000, np.random.default_rng(0))
        assert e.shape == (20_000,) and np.all(e >= 0.0)

    def test_rejection_matches_halfnormal_mean(self):
        # zero mean makes the truncated mean sqrt(2/pi)*std exactly
        cfg = EhConfig(arrival_mean_j=0.0, arrival_std_j=1.0)
        e = sample_arrivals(cfg, 100_000, np.random.default_rng(1))
        want = np.sqrt(2.0 / np.pi)
        se = np.sqrt(1.0 - 2.0 / np.pi) / np.sqrt(e.size)
        assert abs(e.mean() - want) < 4.0 * se

    def test_mild_truncation_keeps_mean(self):
        cfg = EhConfig()
        e = sample_arrivals(cfg, 100_000, np.random.default_rng(2))
        se = cfg.arrival_std_j / np.sqrt(e.size)
        assert abs(e.mean() - cfg.arrival_mean_j) < 4.0 * se

    def test_gains_unit_mean_exponential(self):
        cfg = EhConfig()
        g = sample_gains(cfg, 100_000, np.random.default_rng(3))
        assert np.all(g >= 0.0)
        assert abs(g.mean() - 1.0) < 4.0 / np.sqrt(g.size)

    def test_episode_deterministic_in_seed(self):
        cfg = EhConfig()
        ep1 = generate_episode(cfg, 500, np.random.default_rng(7), battery0_j=0.1)
        ep2 = generate_episode(cfg, 500, np.random.default_rng(7), battery0_j=0.1)
        np.testing.assert_array_equal(ep1.gains, ep2.gains)
        np.testing.assert_array_equal(ep1.arrivals, ep2.arrivals)
        assert ep1.n_slots == 500 and ep1.battery0_j == 0.1


class TestRunPolicy:
    def test_trace_invariants_under_greedy(self):
        cfg = EhConfig()
        ep = generate_episode(cfg, 2000, np.random.default_rng(5))

        def greedy(b, g):
            return min(b / cfg.slot_s, cfg.p_max_w)

        rewards, batteries = run_policy(ep, greedy)
        assert batteries.shape == (2001,)
        assert np.all(batteries >= -1e-15)
        assert np.all(batteries <= cfg.battery_capacity_j + 1e-15)
        assert np.all(np.diff(batteries) <= ep.arrivals + 1e-12)
        assert np.all(rewards >= 0.0)

    def test_rewards_recompute_from_trace(self):
        cfg = EhConfig()
        ep = generate_episode(cfg, 200, np.random.default_rng(6), battery0_j=0.2)
        taken = []

        def half_greedy(b, g):
            p = 0.5 * min(b / cfg.slot_s, cfg.p_max_w)
            taken.append(p)
            return p

        rewards, _ = run_policy(ep, half_greedy)
        want = np.log1p(np.array(taken) * ep.gains / cfg.noise_w)
        np.testing.assert_allclose(rewards, want, rtol=1e-12)

    def test_infeasible_policy_raises(self):
        cfg = EhConfig()
        ep = EhEpisode(cfg=cfg, gains=np.ones(3), arrivals=np.zeros(3), battery0_j=0.0)
        with pytest.raises(ValueError):
            run_policy(ep, lambda b, g: cfg.p_max_w)
