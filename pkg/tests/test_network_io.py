"""Network construction rules and bit-exact JSON round-trips."""
import json

import numpy as np
import pytest

from l2opt.nn import Activation, BatchNorm, DenseLayer, Network, NetworkFormatError
from l2opt.train import glorot_network


def random_net(rng, batch_norm=False):
    return glorot_network(
        3, [5, 4, 2], ["elu", "tanh", "sigmoid"], rng, batch_norm=[batch_norm, False, False]
    )


class TestConstruction:
    def test_width_chain_validated(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            Network(
                3,
                [
                    DenseLayer(rng.normal(size=(3, 5)), np.zeros(5), Activation("relu")),
                    DenseLayer(rng.normal(size=(4, 2)), np.zeros(2), Activation("linear")),
                ],
            )

    def test_bias_width_validated(self):
        with pytest.raises(ValueError):
            DenseLayer(np.zeros((3, 5)), np.zeros(4), Activation("relu"))

    def test_nonzero_bias_with_batch_norm_rejected(self):
        with pytest.raises(ValueError):
            DenseLayer(
                np.zeros((3, 5)), np.ones(5), Activation("relu"), BatchNorm.identity(5)
            )

    def test_trainable_arrays_order(self):
        rng = np.random.default_rng(1)
        net = random_net(rng, batch_norm=True)
        arrays = net.trainable_arrays()
        # bn layer contributes (weights, gamma, beta); plain layers (weights, biases)
        assert len(arrays) == 3 + 2 + 2
        assert arrays[0].shape == (3, 5)
        assert arrays[1].shape == (5,) and np.all(arrays[1] == 1.0)  # gamma
        assert arrays[2].shape == (5,) and np.all(arrays[2] == 0.0)  # beta


class TestSerialization:
    @pytest.mark.parametrize("batch_norm", [False, True])
    def test_round_trip_is_bit_exact(self, batch_norm, tmp_path):
        rng = np.random.default_rng(2)
        net = random_net(rng, batch_norm=batch_norm)
        path = tmp_path / "net.json"
        net.save(path)
        loaded = Network.load(path)
        for a, b in zip(net.trainable_arrays(), loaded.trainable_arrays()):
            np.testing.assert_array_equal(a, b)
        for la, lb in zip(net.layers, loaded.layers):
            np.testing.assert_array_equal(la.biases, lb.biases)
            assert la.activation == lb.activation
            if la.batch_norm is not None:
                np.testing.assert_array_equal(la.batch_norm.running_mean, lb.batch_norm.running_mean)
                np.testing.assert_array_equal(la.batch_norm.running_var, lb.batch_norm.running_var)
        # double round-trip produces identical bytes
        assert json.dumps(net.to_doc()) == json.dumps(loaded.to_doc())

    def test_version_mismatch_rejected(self):
        doc = random_net(np.random.default_rng(3)).to_doc()
        doc["version"] = 99
        with pytest.raises(NetworkFormatError):
            Network.from_doc(doc)

    def test_wrong_format_rejected(self):
        with pytest.raises(NetworkFormatError):
            Network.from_doc({"format": "something-else", "version": 1})

    def test_shape_inconsistency_rejected(self):
        doc = random_net(np.random.default_rng(4)).to_doc()
        doc["layers"][1]["weights"] = [[1.0, 2.0], [3.0, 4.0]]
        with pytest.raises(NetworkFormatError):
            Network.from_doc(doc)

    def test_non_finite_rejected(self):
        net = random_net(np.random.default_rng(5))
        net.layers[0].weights[0, 0] = np.nan
        with pytest.raises(NetworkFormatError):
            net.to_doc()
        doc = random_net(np.random.default_rng(6)).to_doc()
        doc["layers"][0]["biases"][0] = 1e999  # json-style Infinity
        with pytest.raises(NetworkFormatError):
            Network.from_doc(doc)


def test_snapshot_restore_round_trip():
    rng = np.random.default_rng(7)
    net = random_net(rng)
    snap = net.snapshot()
    for a in net.trainable_arrays():
        a += 1.0
    net.restore(snap)
    for a, s in zip(net.trainable_arrays(), snap):
        np.testing.assert_array_equal(a, s)
