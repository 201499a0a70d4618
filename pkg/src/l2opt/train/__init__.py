"""Optimizers, initialization and the mini-batch training loop."""

from .initializers import glorot_init, glorot_network
from .loop import TrainConfig, TrainResult, evaluate_loss, history_from_csv, history_to_csv, train
from .optim import (
    Adam,
    AdaGrad,
    LrSchedule,
    Momentum,
    Nesterov,
    Optimizer,
    RmsProp,
    Sgd,
    make_optimizer,
)

__all__ = [
    "glorot_init",
    "glorot_network",
    "TrainConfig",
    "TrainResult",
    "evaluate_loss",
    "history_from_csv",
    "history_to_csv",
    "train",
    "Adam",
    "AdaGrad",
    "LrSchedule",
    "Momentum",
    "Nesterov",
    "Optimizer",
    "RmsProp",
    "Sgd",
    "make_optimizer",
]
