"""Pretrain on cheap model-generated labels, refine on scarce measured ones.

The refinement phase keeps the architecture and the input/target scalers
of the pretrained model and continues gradient descent from its weights,
optionally with some layers held fixed and optionally on a pool of the
measured samples with model samples mixed back in.  An equal-budget
baseline trained on the measured samples alone quantifies what the
pretraining bought.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from ..nn.network import Network
from ..train.loop import TrainConfig, train
from ..train.optim import make_optimizer
from .datasets import SurrogateDataset
from .surrogate import SurrogateModel, Standardizer


@dataclass
class TransferPlan:
    source: SurrogateDataset
    target: SurrogateDataset
    phase1: TrainConfig
    phase2: TrainConfig
    freeze: tuple = ()          # layer indices held fixed while refining
    mix_source: bool = False    # refine on target plus source pooled
    redraws: int = 0            # extra init draws allowed per trained model


@dataclass
class TransferOutcome:
    pretrained: SurrogateModel
    refined: SurrogateModel
    baseline: SurrogateModel | None
    metrics: dict = field(default_factory=dict)


class _FrozenArrays:
    """Optimizer wrapper that zeroes the gradient of selected arrays."""

    def __init__(self, inner, indices):
        self.inner = inner
        self.indices = tuple(indices)

    def grad_shift(self, params):
        return self.inner.grad_shift(params)

    def step(self, params, grads, lr):
        for i in self.indices:
            grads[i][...] = 0.0
        self.inner.step(params, grads, lr)


def _frozen_positions(net: Network, layers: tuple) -> list:
    """Positions in trainable_arrays() covered by the given layer indices."""
    spans, pos = [], 0
    for layer in net.layers:
        n = 2 if layer.batch_norm is None else 3
        spans.append(range(pos, pos + n))
        pos += n
    out = []
    for li in layers:
        if not 0 <= li < len(spans):
            raise ValueError(f"freeze index {li} out of range for {len(spans)} layers")
        out.extend(spans[li])
    return out


def relative_mse(pred: np.ndarray, y: np.ndarray) -> float:
    """Mean squared error over the variance of the targets."""
    pred = np.asarray(pred, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    var = float(y.var())
    if var <= 0.0:
        raise ValueError("targets have zero variance")
    return float(np.mean((pred - y) ** 2)) / var


def _copy_net(net: Network) -> Network:
    return Network.from_doc(net.to_doc())


# A fit stuck at the target mean from the first epoch has relative MSE near
# one; anything above this bound is a dead rectifier path, not a bad fit.
_DEGENERATE_REL_MSE = 0.5


def transfer_train(
    plan: TransferPlan,
    net_factory,
    rng: np.random.Generator,
    optimizer: str = "adam",
    standardize_targets: bool = True,
    baseline: bool = True,
) -> TransferOutcome:
    """Run both phases plus the equal-budget single-set baseline.

    ``net_factory(rng)`` must build a fresh network of the right width; it
    is called once per trained model.  Scalers are fit on the source train
    split and reused verbatim in phase two, so refined weights keep seeing
    inputs on the scale they were pretrained with.  Metrics report relative
    MSE on the target validation split for every model.

    Narrow rectifier nets occasionally draw an initialization whose units
    never activate; such a net predicts a constant forever.  When
    ``plan.redraws`` is positive, any fit whose validation relative MSE
    stays above 0.5 is discarded and retrained from a fresh draw (at most
    ``redraws`` extra times), for the pretrained model and the baseline
    alike.  The retries consume the same generator, so a given seed still
    produces one reproducible outcome.
    """
    src, tgt = plan.source, plan.target
    if src.inputs.shape[1] != tgt.inputs.shape[1] or src.targets.shape[1] != tgt.targets.shape[1]:
        raise ValueError("source and target datasets disagree on feature or target width")

    x_tr, y_tr = src.subset("train")
    x_va, y_va = src.subset("valid")
    if x_tr.shape[0] == 0 or x_va.shape[0] == 0:
        raise ValueError("source dataset needs train and valid splits")
    tx_tr, ty_tr = tgt.subset("train")
    tx_va, ty_va = tgt.subset("valid")
    if tx_va.shape[0] == 0:
        raise ValueError("target dataset needs a valid split")

    x_norm = Standardizer.fit(x_tr)
    y_norm = Standardizer.fit(y_tr) if standardize_targets else None

    def enc(x, y):
        return x_norm.encode(x), (y_norm.encode(y) if y_norm is not None else y)

    def fresh_net():
        built = net_factory(rng)
        if built.layers[0].weights.shape[0] != src.inputs.shape[1]:
            raise ValueError(
                f"network input width {built.layers[0].weights.shape[0]} does not "
                f"match dataset width {src.inputs.shape[1]}")
        return built

    def fit_until_alive(fit, score):
        trained = fresh_net()
        result = fit(trained)
        for _ in range(max(plan.redraws, 0)):
            if score(trained) <= _DEGENERATE_REL_MSE:
                break
            trained = fresh_net()
            result = fit(trained)
        return trained, result

    net, hist1 = fit_until_alive(
        lambda n: train(n, enc(x_tr, y_tr), enc(x_va, y_va), plan.phase1,
                        make_optimizer(optimizer), rng),
        lambda n: relative_mse(
            SurrogateModel(net=n, x_norm=x_norm, y_norm=y_norm).predict(x_va), y_va))
    pretrained = SurrogateModel(net=net, x_norm=x_norm, y_norm=y_norm)

    refined_net = _copy_net(net)
    hist2 = None
    p2_x, p2_y = tx_tr, ty_tr
    if plan.mix_source:
        p2_x = np.concatenate([tx_tr, x_tr])
        p2_y = np.concatenate([ty_tr, y_tr])
    if plan.phase2.epochs > 0 and p2_x.shape[0] > 0:
        opt = make_optimizer(optimizer)
        if plan.freeze:
            opt = _FrozenArrays(opt, _frozen_positions(refined_net, plan.freeze))
        hist2 = train(refined_net, enc(p2_x, p2_y), enc(tx_va, ty_va), plan.phase2,
                      opt, rng)
    refined = SurrogateModel(net=refined_net, x_norm=x_norm, y_norm=y_norm)

    base_model = None
    hist_base = None
    if baseline and tx_tr.shape[0] > 0:
        budget = dataclasses.replace(plan.phase1,
                                     epochs=plan.phase1.epochs + plan.phase2.epochs)
        bx_norm = Standardizer.fit(tx_tr)
        by_norm = Standardizer.fit(ty_tr) if standardize_targets else None

        def benc(x, y):
            return bx_norm.encode(x), (by_norm.encode(y) if by_norm is not None else y)

        base_net, hist_base = fit_until_alive(
            lambda n: train(n, benc(tx_tr, ty_tr), benc(tx_va, ty_va), budget,
                            make_optimizer(optimizer), rng),
            lambda n: relative_mse(
                SurrogateModel(net=n, x_norm=bx_norm, y_norm=by_norm).predict(tx_va),
                ty_va))
        base_model = SurrogateModel(net=base_net, x_norm=bx_norm, y_norm=by_norm)

    metrics = {
        "pretrained": relative_mse(pretrained.predict(tx_va), ty_va),
        "refined": relative_mse(refined.predict(tx_va), ty_va),
        "source_valid": relative_mse(pretrained.predict(x_va), y_va),
        "history_phase1": hist1,
        "history_phase2": hist2,
    }
    if base_model is not None:
        metrics["baseline"] = relative_mse(base_model.predict(tx_va), ty_va)
        metrics["history_baseline"] = hist_base
    return TransferOutcome(pretrained=pretrained, refined=refined,
                           baseline=base_model, metrics=metrics)
