"""Mini-batch training loop with early stopping on validation loss.

Each epoch shuffles the sample order and walks load-balanced contiguous
slices of the permutation.  The loop keeps the parameter snapshot with the
lowest validation loss and restores it at the end.  History rows report the
unregularized data loss on the full train and validation sets, evaluated in
inference mode (no dropout, frozen batch-norm statistics).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ..nn import engine
from ..nn.functional import batch_loss
from ..nn.network import Network
from .optim import LrSchedule, Optimizer


@dataclass
class TrainConfig:
    loss: str = "mse"
    epochs: int = 100
    batch_size: int = 32
    lr: float = 1e-3
    lr_steps: int | None = None
    lr_final: float | None = None
    reg: tuple[int, float] | None = None
    dropout_keep: float | None = None
    patience: int | None = None
    shuffle: bool = True

    def schedule(self) -> LrSchedule:
        return LrSchedule(self.lr, self.lr_steps, self.lr_final)


@dataclass
class TrainResult:
    history: list[tuple[int, float, float]]
    best_epoch: int
    best_valid: float
    steps: int


def evaluate_loss(net: Network, X, Y, loss: str) -> float:
    return batch_loss(loss, np.asarray(Y, dtype=np.float64), engine.forward(net, X))


def train(
    net: Network,
    train_set: tuple[np.ndarray, np.ndarray],
    valid_set: tuple[np.ndarray, np.ndarray],
    cfg: TrainConfig,
    opt: Optimizer,
    rng: np.random.Generator,
) -> TrainResult:
    """Train ``net`` in place; on return it holds the best-validation snapshot."""
    X, Y = (np.ascontiguousarray(a, dtype=np.float64) for a in train_set)
    Xv, Yv = (np.ascontiguousarray(a, dtype=np.float64) for a in valid_set)
    n = X.shape[0]
    if n < 1 or Xv.shape[0] < 1:
        raise ValueError("train and validation sets must be non-empty")
    if cfg.batch_size < 1:
        raise ValueError("batch size must be positive")
    if cfg.epochs < 0:
        raise ValueError("epoch budget must be non-negative")

    schedule = cfg.schedule()
    params = net.trainable_arrays()
    history: list[tuple[int, float, float]] = []
    best_valid = np.inf
    best_epoch = 0
    best_snap = None
    stale = 0
    step = 0
    n_batches = max(1, -(-n // cfg.batch_size))

    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n) if cfg.shuffle else np.arange(n)
        for idx in np.array_split(order, n_batches):
            Xb = np.ascontiguousarray(X[idx])
            Yb = np.ascontiguousarray(Y[idx])
            masks = None
            if cfg.dropout_keep is not None:
                masks = engine.draw_dropout_masks(net, Xb.shape[0], cfg.dropout_keep, rng)
            shift = opt.grad_shift(params)
            if shift is None:
                grads, _ = engine.batch_gradient(net, Xb, Yb, cfg.loss, reg=cfg.reg, masks=masks)
            else:
                saved = [p.copy() for p in params]
                for p, s in zip(params, shift):
                    p += s
                grads, _ = engine.batch_gradient(net, Xb, Yb, cfg.loss, reg=cfg.reg, masks=masks)
                for p, s in zip(params, saved):
                    p[:] = s
            opt.step(params, grads, schedule.value(step))
            step += 1
        train_loss = evaluate_loss(net, X, Y, cfg.loss)
        valid_loss = evaluate_loss(net, Xv, Yv, cfg.loss)
        history.append((epoch, train_loss, valid_loss))
        if valid_loss < best_valid:
            best_valid = valid_loss
            best_epoch = epoch
            best_snap = net.snapshot()
            stale = 0
        else:
            stale += 1
            if cfg.patience is not None and stale >= cfg.patience:
                break

    if best_snap is not None:
        net.restore(best_snap)
    return TrainResult(history, best_epoch, float(best_valid), step)


def history_to_csv(history, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "valid_loss"])
        for epoch, tr, va in history:
            writer.writerow([epoch, repr(float(tr)), repr(float(va))])


def history_from_csv(path) -> list[tuple[int, float, float]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["epoch", "train_loss", "valid_loss"]:
            raise ValueError("not a training-history file")
        return [(int(r[0]), float(r[1]), float(r[2])) for r in reader]
