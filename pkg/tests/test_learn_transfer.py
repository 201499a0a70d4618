import numpy as np
import pytest

from l2opt.learn import (
    SurrogateDataset,
    TransferPlan,
    density_network,
    relative_mse,
    transfer_train,
)
from l2opt.train.loop import TrainConfig

PHASE1 = TrainConfig(epochs=40, batch_size=32, lr=3e-3)
PHASE2 = TrainConfig(epochs=15, batch_size=16, lr=3e-4)


def smooth_task(n_train, n_valid, seed, shift=0.0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.0, 1.0, size=(n_train + n_valid, 2))
    y = np.sin(2.0 * x[:, :1]) + 0.5 * x[:, 1:2] + shift
    splits = np.array([0] * n_train + [1] * n_valid, dtype=np.int8)
    return SurrogateDataset(inputs=x, targets=y, splits=splits,
                            manifest={"format": "l2opt-dataset", "task": "toy"})


def arrays_of(model):
    return [np.array(a) for a in model.net.trainable_arrays()]


class TestRelativeMse:
    def test_hand_value(self):
        y = np.array([[0.0], [2.0]])
        pred = np.array([[1.0], [2.0]])
        assert relative_mse(pred, y) == pytest.approx(0.5 / 1.0, rel=1e-14)

    def test_constant_targets_rejected(self):
        with pytest.raises(ValueError):
            relative_mse(np.zeros((3, 1)), np.ones((3, 1)))


class TestTransferTrain:
    def test_zero_phase_two_is_bit_exact(self):
        src = smooth_task(200, 60, seed=1)
        tgt = smooth_task(50, 30, seed=2, shift=0.3)
        plan = TransferPlan(source=src, target=tgt, phase1=PHASE1,
                            phase2=TrainConfig(epochs=0, batch_size=16, lr=3e-4))
        out = transfer_train(plan, density_network, np.random.default_rng(5),
                             baseline=False)
        for a, b in zip(arrays_of(out.pretrained), arrays_of(out.refined)):
            assert np.array_equal(a, b)
        assert out.metrics["history_phase2"] is None

    def test_no_target_samples_keeps_pretrained(self):
        src = smooth_task(200, 60, seed=1)
        tgt = smooth_task(0, 30, seed=2, shift=0.3)
        plan = TransferPlan(source=src, target=tgt, phase1=PHASE1, phase2=PHASE2)
        out = transfer_train(plan, density_network, np.random.default_rng(5))
        for a, b in zip(arrays_of(out.pretrained), arrays_of(out.refined)):
            assert np.array_equal(a, b)
        assert out.baseline is None
        assert "baseline" not in out.metrics

    def test_identical_sets_do_not_regress(self):
        src = smooth_task(400, 100, seed=1)
        plan = TransferPlan(source=src, target=src, phase1=PHASE1, phase2=PHASE2)
        out = transfer_train(plan, density_network, np.random.default_rng(5))
        m = out.metrics
        assert m["refined"] <= m["pretrained"] * (1.0 + 1e-9)

    def test_refinement_closes_a_shift(self):
        src = smooth_task(400, 100, seed=1)
        tgt = smooth_task(60, 40, seed=2, shift=0.5)
        plan = TransferPlan(source=src, target=tgt, phase1=PHASE1,
                            phase2=TrainConfig(epochs=60, batch_size=16, lr=1e-3))
        out = transfer_train(plan, density_network, np.random.default_rng(7))
        assert out.metrics["refined"] < out.metrics["pretrained"]

    def test_width_mismatch_rejected(self):
        src = smooth_task(50, 20, seed=1)
        plan = TransferPlan(source=src, target=src, phase1=PHASE1, phase2=PHASE2)
        with pytest.raises(ValueError):
            transfer_train(plan, lambda r: density_network(r, n_inputs=3),
                           np.random.default_rng(5))

    def test_source_needs_both_splits(self):
        src = smooth_task(50, 0, seed=1)
        plan = TransferPlan(source=src, target=src, phase1=PHASE1, phase2=PHASE2)
        with pytest.raises(ValueError):
            transfer_train(plan, density_network, np.random.default_rng(5))

    def test_metrics_cover_all_models(self):
        src = smooth_task(200, 60, seed=1)
        tgt = smooth_task(50, 30, seed=2, shift=0.3)
        plan = TransferPlan(source=src, target=tgt, phase1=PHASE1, phase2=PHASE2)
        out = transfer_train(plan, density_network, np.random.default_rng(5))
        for key in ("pretrained", "refined", "baseline", "source_valid"):
            assert np.isfinite(out.metrics[key])
        assert out.metrics["history_baseline"].steps > 0

    def test_baseline_budget_matches_both_phases(self):
        src = smooth_task(100, 30, seed=1)
        tgt = smooth_task(64, 30, seed=2, shift=0.3)
        p1 = TrainConfig(epochs=7, batch_size=16, lr=1e-3)
        p2 = TrainConfig(epochs=5, batch_size=16, lr=1e-4)
        plan = TransferPlan(source=src, target=tgt, phase1=p1, phase2=p2)
        out = transfer_train(plan, density_network, np.random.default_rng(5))
        assert len(out.metrics["history_baseline"].history) == 12


class TestFreeze:
    def test_frozen_layer_holds_still(self):
        src = smooth_task(200, 60, seed=1)
        tgt = smooth_task(60, 30, seed=2, shift=0.4)
        plan = TransferPlan(source=src, target=tgt, phase1=PHASE1,
                            phase2=TrainConfig(epochs=30, batch_size=16, lr=1e-3),
                            freeze=(0, 1))
        out = transfer_train(plan, density_network, np.random.default_rng(9),
                             baseline=False)
        pre, ref = arrays_of(out.pretrained), arrays_of(out.refined)
        # layers 0 and 1 contribute two arrays each (weights, biases)
        for i in range(4):
            assert np.array_equal(pre[i], ref[i])
        assert any(not np.array_equal(a, b) for a, b in zip(pre[4:], ref[4:]))

    def test_freeze_index_out_of_range(self):
        src = smooth_task(50, 20, seed=1)
        plan = TransferPlan(source=src, target=src, phase1=PHASE1, phase2=PHASE2,
                            freeze=(9,))
        with pytest.raises(ValueError):
            transfer_train(plan, density_network, np.random.default_rng(5))


class TestRedraws:
    def test_degenerate_first_draw_is_replaced(self):
        src = smooth_task(400, 100, seed=1)
        calls = []

        def factory(rng):
            net = density_network(rng)
            if not calls:
                for layer in net.layers[:-1]:
                    layer.biases[...] = -100.0  # every unit starts dead
            calls.append(1)
            return net

        plan = TransferPlan(source=src, target=src, phase1=PHASE1,
                            phase2=TrainConfig(epochs=0, batch_size=16, lr=3e-4),
                            redraws=2)
        out = transfer_train(plan, factory, np.random.default_rng(5),
                             baseline=False)
        assert len(calls) == 2
        assert out.metrics["source_valid"] < 0.5

    def test_without_redraws_the_dead_net_stays(self):
        src = smooth_task(400, 100, seed=1)

        def factory(rng):
            net = density_network(rng)
            for layer in net.layers[:-1]:
                layer.biases[...] = -100.0
            return net

        plan = TransferPlan(source=src, target=src, phase1=PHASE1,
                            phase2=TrainConfig(epochs=0, batch_size=16, lr=3e-4))
        out = transfer_train(plan, factory, np.random.default_rng(5),
                             baseline=False)
        assert out.metrics["source_valid"] == pytest.approx(1.0, rel=0.05)


class TestMixSource:
    def test_pooled_refinement_runs(self):
        src = smooth_task(200, 60, seed=1)
        tgt = smooth_task(40, 30, seed=2, shift=0.2)
        plan = TransferPlan(source=src, target=tgt, phase1=PHASE1, phase2=PHASE2,
                            mix_source=True)
        out = transfer_train(plan, density_network, np.random.default_rng(5),
                             baseline=False)
        assert np.isfinite(out.metrics["refined"])
