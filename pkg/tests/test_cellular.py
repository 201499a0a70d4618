import numpy as np
import pytest

from l2opt.env.cellular import (
    AnalyticEeModel,
    CellularConfig,
    DeploymentRealization,
    analytic_ee,
    analytic_pgrid,
    analytic_se,
    cell_activity,
    empirical_ee,
    evaluate_realization,
    interference_factor,
    realize_deployment,
)
from l2opt.solvers.density import optimal_density


class TestActivity:
    def test_endpoints(self):
        assert cell_activity(0.0) == 0.0
        assert cell_activity(1e9) == pytest.approx(1.0, abs=1e-9)

    def test_frozen_value(self):
        assert cell_activity(3.5) == pytest.approx(1.0 - 2.0**-3.5, rel=1e-14)

    def test_monotone(self):
        x = np.linspace(0.0, 50.0, 200)
        assert np.all(np.diff(cell_activity(x)) > 0.0)


class TestInterferenceFactor:
    def test_closed_form_alpha_four(self):
        # alpha = 4 integrates to sqrt(g)*(pi/2 - arctan(1/sqrt(g)))
        for g in [0.1, 1.0, 10.0]:
            expected = np.sqrt(g) * (np.pi / 2.0 - np.arctan(1.0 / np.sqrt(g)))
            assert interference_factor(g, 4.0) == pytest.approx(expected, rel=1e-10)

    def test_unit_threshold(self):
        assert interference_factor(1.0, 4.0) == pytest.approx(np.pi / 4.0, rel=1e-10)

    def test_grows_with_threshold(self):
        vals = [interference_factor(g, 3.5) for g in [0.5, 1.0, 2.0, 4.0]]
        assert all(b > a for a, b in zip(vals, vals[1:]))


class TestAnalytic:
    def test_no_terminals_limit(self):
        m = AnalyticEeModel(mt_density=1e-30)
        lam = 1e-5
        assert analytic_se(lam, m) == pytest.approx(0.0, abs=1e-12)
        assert analytic_pgrid(lam, m) == pytest.approx(lam * m.p_idle_w, rel=1e-6)

    def test_nonnegative_and_vectorized(self):
        m = AnalyticEeModel()
        lams = np.geomspace(1e-7, 1e-3, 64)
        ee = analytic_ee(lams, m)
        assert ee.shape == lams.shape
        assert np.all(ee >= 0.0)
        for i in [0, 10, 63]:
            assert ee[i] == pytest.approx(analytic_ee(float(lams[i]), m), rel=1e-14)

    def test_unique_interior_maximum_default(self):
        m = AnalyticEeModel()
        lams = np.geomspace(1e-7, 1e-3, 400)
        ee = analytic_ee(lams, m)
        i = int(np.argmax(ee))
        assert 0 < i < len(lams) - 1
        rising = np.diff(ee) > 0
        assert np.all(rising[: i - 1]) and not np.any(rising[i:])

    def test_injectable_pieces(self):
        m = AnalyticEeModel(activity=lambda x: np.minimum(x, 1.0),
                            conditioning=lambda lam, p, x: 0.5)
        base = AnalyticEeModel(activity=lambda x: np.minimum(x, 1.0))
        assert analytic_se(1e-5, m) == pytest.approx(0.5 * analytic_se(1e-5, base), rel=1e-14)


def hand_realization():
    bs = np.array([[25.0, 50.0], [75.0, 50.0]])
    mt = np.array([[20.0, 50.0], [30.0, 50.0], [70.0, 50.0]])
    return DeploymentRealization(bs_xy=bs, mt_xy=mt, window_m=100.0)


def hand_config(**kw):
    base = dict(
        bs_density=2e-4, mt_density=3e-4, window_m=100.0, p_tx_w=2.0,
        p_circ_w=1.0, p_idle_w=0.5, gamma_d=1.0, gamma_a=0.1,
        bandwidth_hz=1.0, path_alpha=4.0, noise_w=1e-30,
    )
    base.update(kw)
    return CellularConfig(**base)


class TestEvaluateRealization:
    def test_hand_enumeration_all_covered(self):
        # distances to serving BS are all 5 m, cross distances 55/45/45 m;
        # with unit fading everywhere SIR = (45/5)^4 or (55/5)^4 >> 1
        cfg = hand_config()
        real = hand_realization()
        out = evaluate_realization(cfg, real, fading=np.ones((3, 2)))
        np.testing.assert_array_equal(out.covered, [True, True, True])
        np.testing.assert_array_equal(out.cell_load, [2.0, 1.0])
        # cell 0 serves 2 terminals at B/2 each, cell 1 serves 1 at B
        area = 100.0**2
        assert out.pse == pytest.approx((0.5 + 0.5 + 1.0) * np.log2(2.0) / area, rel=1e-12)
        assert out.pgrid == pytest.approx((2 * 2.0 + 1.0 * 3) / area, rel=1e-12)

    def test_hand_enumeration_with_coverage_failure(self):
        # terminal 0 sees a huge interfering gain and drops out; cell 0 stays
        # active with one terminal at full bandwidth
        cfg = hand_config()
        real = hand_realization()
        fading = np.ones((3, 2))
        fading[0, 1] = 1e9
        out = evaluate_realization(cfg, real, fading=fading)
        np.testing.assert_array_equal(out.covered, [False, True, True])
        np.testing.assert_array_equal(out.cell_load, [1.0, 1.0])
        area = 100.0**2
        assert out.pse == pytest.approx(2.0 * np.log2(2.0) / area, rel=1e-12)
        assert out.pgrid == pytest.approx((2 * 2.0 + 1.0 * 2) / area, rel=1e-12)

    def test_access_threshold_blocks(self):
        cfg = hand_config(noise_w=1e6)  # mean SNR ~ 0 everywhere
        out = evaluate_realization(cfg, hand_realization(), fading=np.ones((3, 2)))
        assert not np.any(out.covered)
        assert out.pse == 0.0
        area = 100.0**2
        assert out.pgrid == pytest.approx(2 * 0.5 / area, rel=1e-12)

    def test_zero_terminals(self):
        cfg = hand_config()
        real = DeploymentRealization(hand_realization().bs_xy, np.zeros((0, 2)), 100.0)
        out = evaluate_realization(cfg, real, fading=np.zeros((0, 2)))
        assert out.pse == 0.0
        assert out.pgrid == pytest.approx(2 * 0.5 / 100.0**2, rel=1e-12)

    def test_zero_base_stations(self):
        cfg = hand_config()
        real = DeploymentRealization(np.zeros((0, 2)), hand_realization().mt_xy, 100.0)
        out = evaluate_realization(cfg, real, fading=np.zeros((3, 0)))
        assert out.pse == 0.0 and out.pgrid == 0.0

    def test_single_bs_has_infinite_sir(self):
        cfg = hand_config()
        real = DeploymentRealization(np.array([[50.0, 50.0]]), np.array([[60.0, 50.0]]), 100.0)
        out = evaluate_realization(cfg, real, fading=np.array([[1e-12]]))
        assert out.covered[0]

    def test_huge_threshold_kills_coverage(self):
        cfg = hand_config(gamma_d=1e15)
        out = evaluate_realization(cfg, hand_realization(), fading=np.ones((3, 2)))
        assert out.pse == 0.0


class TestRealize:
    def test_poisson_reproducible_and_in_window(self):
        cfg = CellularConfig()
        a = realize_deployment(cfg, np.random.default_rng(5))
        b = realize_deployment(cfg, np.random.default_rng(5))
        np.testing.assert_array_equal(a.bs_xy, b.bs_xy)
        np.testing.assert_array_equal(a.mt_xy, b.mt_xy)
        assert np.all(a.bs_xy >= 0.0) and np.all(a.bs_xy <= cfg.window_m)

    def test_poisson_mean_counts(self):
        cfg = CellularConfig()
        rng = np.random.default_rng(6)
        counts = [len(realize_deployment(cfg, rng).bs_xy) for _ in range(300)]
        mean = cfg.bs_density * cfg.window_m**2
        assert np.mean(counts) == pytest.approx(mean, abs=4.0 * np.sqrt(mean / 300))

    def test_grid_density_exact(self):
        cfg = CellularConfig(kind="grid", bs_density=1e-5, window_m=2000.0)
        real = realize_deployment(cfg, np.random.default_rng(7))
        spacing = 1.0 / np.sqrt(cfg.bs_density)
        n_side = int(round(2000.0 / spacing))
        assert len(real.bs_xy) == n_side**2
        assert real.window_m == pytest.approx(n_side * spacing, rel=1e-12)
        assert len(real.bs_xy) / real.area_m2 == pytest.approx(1e-5, rel=1e-12)
        assert np.all(real.bs_xy > 0.0) and np.all(real.bs_xy < real.window_m)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            realize_deployment(CellularConfig(kind="hex"), np.random.default_rng(0))


class TestEmpirical:
    def test_reproducible(self):
        cfg = CellularConfig(window_m=1000.0)
        a = empirical_ee(cfg, np.random.default_rng(8), 10)
        b = empirical_ee(cfg, np.random.default_rng(8), 10)
        assert a.ee == b.ee
        np.testing.assert_array_equal(a.pse_samples, b.pse_samples)

    def test_more_realizations_reduce_scatter(self):
        cfg = CellularConfig(window_m=1000.0)
        rng = np.random.default_rng(9)
        singles = np.array([empirical_ee(cfg, rng, 1).pse for _ in range(120)])
        pairs = singles.reshape(60, 2).mean(axis=1)
        assert np.var(pairs) < 0.8 * np.var(singles)

    def test_ee_is_ratio_of_means(self):
        cfg = CellularConfig(window_m=1000.0)
        out = empirical_ee(cfg, np.random.default_rng(10), 12)
        assert out.ee == pytest.approx(np.mean(out.pse_samples) / np.mean(out.pgrid_samples))


class TestOptimalDensity:
    def test_interior_max_matches_dense_grid(self):
        m = AnalyticEeModel()
        lam, val = optimal_density(m, 1e-7, 1e-3, n_grid=64)
        grid = np.geomspace(1e-7, 1e-3, 4096)
        ee = analytic_ee(grid, m)
        j = int(np.argmax(ee))
        assert 1e-7 < lam < 1e-3
        assert val >= ee[j] * (1.0 - 1e-3)
        assert lam == pytest.approx(grid[j], rel=0.01)

    def test_no_idle_power_is_boundary(self):
        # without idle draw, densifying never hurts: maximum sits at the top
        # of the density range (the smallest cell radius)
        m = AnalyticEeModel(p_idle_w=0.0)
        lam, _ = optimal_density(m, 1e-7, 1e-3)
        assert lam == pytest.approx(1e-3, rel=1e-6)

    def test_argmax_dominates_random_draws(self):
        m = AnalyticEeModel()
        lam, val = optimal_density(m, 1e-7, 1e-3)
        rng = np.random.default_rng(11)
        draws = 10.0 ** rng.uniform(-7, -3, size=100)
        assert np.all(val >= analytic_ee(draws, m) - 1e-12 * abs(val))
