"""From-scratch dense network engine: layers, losses, passes, serialization."""

from .activations import Activation, activation
from .backend import backend_name, has_compiled
from .engine import (
    backprop,
    backward_from_output,
    batch_gradient,
    draw_dropout_masks,
    forward,
)
from .functional import batch_loss, batchnorm_forward, conv3d, loss_grad, loss_value, pool2d
from .network import BatchNorm, DenseLayer, Network, NetworkFormatError

__all__ = [
    "Activation",
    "activation",
    "backend_name",
    "has_compiled",
    "backprop",
    "backward_from_output",
    "batch_gradient",
    "draw_dropout_masks",
    "forward",
    "batch_loss",
    "batchnorm_forward",
    "conv3d",
    "loss_grad",
    "loss_value",
    "pool2d",
    "BatchNorm",
    "DenseLayer",
    "Network",
    "NetworkFormatError",
]
