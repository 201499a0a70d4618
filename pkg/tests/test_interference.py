import numpy as np
import pytest

from l2opt.env.interference import (
    InterferenceConfig,
    InterferenceScenario,
    default_ap_positions,
    generate_scenario,
    noise_power_w,
    path_gain,
    sinr,
    wsee,
    wsee_batch,
    wsee_terms,
)


def small_scenario(gains, noise=1.0, pc=1.0, mu=1.0, bandwidth=1.0, p_max=1.0):
    gains = np.asarray(gains, dtype=np.float64)
    k = gains.shape[0]
    return InterferenceScenario(
        gains=gains,
        noise_w=noise,
        weights=np.ones(k),
        static_power_w=np.full(k, pc),
        power_scale=np.full(k, mu),
        p_min_w=np.zeros(k),
        p_max_w=np.full(k, p_max),
        bandwidth_hz=bandwidth,
    )


class TestLinkBudget:
    def test_noise_power_matches_arithmetic(self):
        cfg = InterferenceConfig()
        expected = 10.0 ** ((-174.0 + 10.0 * np.log10(180e3) + 3.0) / 10.0) * 1e-3
        assert noise_power_w(cfg) == pytest.approx(expected, rel=1e-15)

    def test_path_gain_at_one_meter_is_free_space_intercept(self):
        cfg = InterferenceConfig()
        expected_db = -20.0 * np.log10(4.0 * np.pi * 1.8e9 / 299_792_458.0)
        assert 10.0 * np.log10(path_gain(1.0, cfg)) == pytest.approx(expected_db, abs=1e-12)

    def test_path_gain_slope(self):
        # decay 4.5 means 45 dB per decade of distance
        cfg = InterferenceConfig()
        drop = 10.0 * np.log10(path_gain(100.0, cfg) / path_gain(1000.0, cfg))
        assert drop == pytest.approx(45.0, abs=1e-10)

    def test_path_gain_clamped_below_one_meter(self):
        cfg = InterferenceConfig()
        assert path_gain(0.01, cfg) == path_gain(1.0, cfg)


class TestObjective:
    def test_sinr_hand_case(self):
        s = small_scenario([[2.0, 0.5], [1.0, 4.0]])
        g = sinr(s, [1.0, 2.0])
        assert g[0] == pytest.approx(2.0 / (1.0 + 2.0 * 0.5), rel=1e-14)
        assert g[1] == pytest.approx(8.0 / (1.0 + 1.0), rel=1e-14)

    def test_wsee_hand_case(self):
        s = small_scenario([[2.0, 0.5], [1.0, 4.0]])
        expected = np.log2(2.0) / 2.0 + np.log2(5.0) / 3.0
        assert wsee(s, [1.0, 2.0]) == pytest.approx(expected, rel=1e-14)

    def test_zero_power_gives_zero(self):
        s = small_scenario([[2.0, 0.5], [1.0, 4.0]])
        assert wsee(s, [0.0, 0.0]) == 0.0

    def test_zero_gains_give_zero(self):
        s = small_scenario(np.zeros((3, 3)))
        assert np.all(sinr(s, [1.0, 1.0, 1.0]) == 0.0)
        assert wsee(s, [1.0, 1.0, 1.0]) == 0.0

    def test_terms_sum_to_total(self):
        rng = np.random.default_rng(3)
        s = small_scenario(rng.uniform(0.1, 2.0, size=(4, 4)))
        p = rng.uniform(0.0, 1.0, size=4)
        assert wsee(s, p) == pytest.approx(float(np.sum(wsee_terms(s, p))), rel=1e-14)

    def test_batch_matches_single(self):
        rng = np.random.default_rng(4)
        s = small_scenario(rng.uniform(0.1, 2.0, size=(3, 3)))
        P = rng.uniform(0.0, 1.0, size=(20, 3))
        vals = wsee_batch(s, P)
        for i in range(20):
            assert vals[i] == pytest.approx(wsee(s, P[i]), rel=1e-13)

    def test_weights_scale_linearly(self):
        rng = np.random.default_rng(5)
        s = small_scenario(rng.uniform(0.1, 2.0, size=(3, 3)))
        p = rng.uniform(0.1, 1.0, size=3)
        base = wsee(s, p)
        s.weights = 2.0 * s.weights
        assert wsee(s, p) == pytest.approx(2.0 * base, rel=1e-14)


class TestGenerator:
    def test_shapes_and_reproducibility(self):
        cfg = InterferenceConfig(n_users=4)
        a = generate_scenario(cfg, np.random.default_rng(11))
        b = generate_scenario(cfg, np.random.default_rng(11))
        assert a.gains.shape == (4, 4)
        np.testing.assert_array_equal(a.gains, b.gains)
        np.testing.assert_array_equal(a.meta["ue_positions_m"], b.meta["ue_positions_m"])
        assert np.all(a.gains >= 0.0)
        assert np.all(np.diag(a.gains) > 0.0)

    def test_association_picks_strongest_channel(self):
        cfg = InterferenceConfig(n_users=6)
        s = generate_scenario(cfg, np.random.default_rng(12))
        np.testing.assert_array_equal(
            s.meta["serving_ap"], np.argmax(s.meta["channel_norms"], axis=1)
        )

    def test_mmse_filter_maximizes_full_power_sinr(self):
        cfg = InterferenceConfig(n_users=3, n_antennas=4)
        s = generate_scenario(cfg, np.random.default_rng(13))
        rng = np.random.default_rng(99)
        p = s.p_max_w

        def sinr_with(k, c):
            h_at = s.meta["channels"][:, s.meta["serving_ap"][k], :]
            num = p[k] * np.abs(np.vdot(c, h_at[k])) ** 2
            den = s.noise_w * np.vdot(c, c).real
            for j in range(cfg.n_users):
                if j != k:
                    den += p[j] * np.abs(np.vdot(c, h_at[j])) ** 2
            return num / den

        for k in range(cfg.n_users):
            c_mmse = s.meta["filters"][k]
            best = sinr_with(k, c_mmse)
            assert best == pytest.approx(sinr(s, p)[k], rel=1e-10)
            h_matched = s.meta["channels"][k, s.meta["serving_ap"][k], :]
            assert best >= sinr_with(k, h_matched) - 1e-12
            for _ in range(10):
                c_rand = rng.standard_normal(4) + 1j * rng.standard_normal(4)
                assert best >= sinr_with(k, c_rand) - 1e-12

    def test_p_max_override(self):
        cfg = InterferenceConfig(n_users=2)
        s = generate_scenario(cfg, np.random.default_rng(14), p_max_w=0.25)
        np.testing.assert_array_equal(s.p_max_w, [0.25, 0.25])
        s2 = generate_scenario(cfg, np.random.default_rng(14), p_max_w=[0.5, 2.0])
        np.testing.assert_array_equal(s2.p_max_w, [0.5, 2.0])

    def test_two_ap_layout(self):
        pos = default_ap_positions(2, 2000.0)
        np.testing.assert_allclose(pos, [[500.0, 1000.0], [1500.0, 1000.0]])
        pos4 = default_ap_positions(4, 2000.0)
        assert pos4.shape == (4, 2)
        assert len(np.unique(pos4, axis=0)) == 4

    def test_doc_round_trip(self):
        cfg = InterferenceConfig(n_users=3)
        s = generate_scenario(cfg, np.random.default_rng(15))
        doc = s.to_doc()
        back = InterferenceScenario.from_doc(doc)
        np.testing.assert_array_equal(back.gains, s.gains)
        np.testing.assert_array_equal(back.p_max_w, s.p_max_w)
        assert back.noise_w == s.noise_w
        p = np.random.default_rng(0).uniform(0, 1, size=3)
        assert wsee(back, p) == wsee(s, p)

    def test_from_doc_rejects_other_formats(self):
        with pytest.raises(ValueError):
            InterferenceScenario.from_doc({"format": "something-else", "version": 1})
