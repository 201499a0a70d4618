"""Parameter initialization."""
from __future__ import annotations

import numpy as np

from ..nn.activations import Activation
from ..nn.network import BatchNorm, DenseLayer, Network


def glorot_init(n_in: int, n_out: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform on +-sqrt(6/(n_in+n_out)), shape (n_in, n_out)."""
    limit = np.sqrt(6.0 / (n_in + n_out))
    return rng.uniform(-limit, limit, size=(n_in, n_out))


def glorot_network(
    input_width: int,
    widths: list[int],
    activations,
    rng: np.random.Generator,
    batch_norm: bool | list[bool] = False,
) -> Network:
    """Glorot-initialized network with zero biases.

    ``activations`` is one Activation/kind for all layers or one per layer;
    ``batch_norm`` likewise (a single bool or one flag per layer).
    """
    n_layers = len(widths)
    if isinstance(activations, (str, Activation)):
        activations = [activations] * n_layers
    if len(activations) != n_layers:
        raise ValueError("one activation per layer is required")
    if isinstance(batch_norm, bool):
        batch_norm = [batch_norm] * n_layers
    if len(batch_norm) != n_layers:
        raise ValueError("one batch-norm flag per layer is required")
    layers = []
    prev = input_width
    for width, act, bn in zip(widths, activations, batch_norm):
        if isinstance(act, str):
            act = Activation(act)
        layers.append(
            DenseLayer(
                weights=glorot_init(prev, width, rng),
                biases=np.zeros(width),
                activation=act,
                batch_norm=BatchNorm.identity(width) if bn else None,
            )
        )
        prev = width
    return Network(input_width, layers)
