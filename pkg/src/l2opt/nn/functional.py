"""Losses, convolution, pooling and batch normalization.

Loss convention: the per-sample loss sums over output components (no mean over
the output width).  Averaging over a mini-batch happens in the engine.
"""
from __future__ import annotations

import numpy as np

MSE = "mse"
CROSS_ENTROPY = "cross_entropy"
LOSSES = (MSE, CROSS_ENTROPY)

# Predictions are clamped this far inside [0, 1] before the logs; values
# outside [0, 1] are a domain error, never silently clamped.
CE_CLAMP = 1e-12


def _check_pair(target, pred):
    target = np.asarray(target, dtype=np.float64)
    pred = np.asarray(pred, dtype=np.float64)
    if target.shape != pred.shape:
        raise ValueError(f"shape mismatch: target {target.shape}, prediction {pred.shape}")
    return target, pred


def _check_ce_domain(target, pred):
    if np.any(target < 0.0) or np.any(target > 1.0):
        raise ValueError("cross_entropy targets must lie in [0, 1]")
    if np.any(pred < 0.0) or np.any(pred > 1.0):
        raise ValueError("cross_entropy predictions must lie in [0, 1]")


def loss_value(kind: str, target, pred) -> float:
    """Per-sample loss, summed over output components."""
    target, pred = _check_pair(target, pred)
    if kind == MSE:
        diff = target - pred
        return float(np.sum(diff * diff))
    if kind == CROSS_ENTROPY:
        _check_ce_domain(target, pred)
        p = np.clip(pred, CE_CLAMP, 1.0 - CE_CLAMP)
        return float(-np.sum(target * np.log(p) + (1.0 - target) * np.log1p(-p)))
    raise ValueError(f"unknown loss kind: {kind!r}")


def loss_grad(kind: str, target, pred) -> np.ndarray:
    """Gradient of the per-sample loss w.r.t. the prediction vector."""
    target, pred = _check_pair(target, pred)
    if kind == MSE:
        return 2.0 * (pred - target)
    if kind == CROSS_ENTROPY:
        _check_ce_domain(target, pred)
        p = np.clip(pred, CE_CLAMP, 1.0 - CE_CLAMP)
        return -target / p + (1.0 - target) / (1.0 - p)
    raise ValueError(f"unknown loss kind: {kind!r}")


def batch_loss(kind: str, targets: np.ndarray, preds: np.ndarray) -> float:
    """Mean per-sample loss over a (batch, width) pair of arrays."""
    targets = np.asarray(targets, dtype=np.float64)
    preds = np.asarray(preds, dtype=np.float64)
    if targets.shape != preds.shape:
        raise ValueError(f"shape mismatch: targets {targets.shape}, predictions {preds.shape}")
    if kind == MSE:
        diff = targets - preds
        return float(np.mean(np.sum(diff * diff, axis=1)))
    if kind == CROSS_ENTROPY:
        _check_ce_domain(targets, preds)
        p = np.clip(preds, CE_CLAMP, 1.0 - CE_CLAMP)
        per = -np.sum(targets * np.log(p) + (1.0 - targets) * np.log1p(-p), axis=1)
        return float(np.mean(per))
    raise ValueError(f"unknown loss kind: {kind!r}")


def conv3d(x: np.ndarray, kernel: np.ndarray, stride: int = 1, pad: int = 0) -> np.ndarray:
    """Cross-correlation of a (H, W, C) input with an (FH, FW, C) kernel.

    The input is zero-padded by ``pad`` on each spatial side; the window slides
    with the given stride and the products are summed directly over all three
    kernel dimensions (one output channel).  Output side = (N + 2*pad - F)//stride + 1.
    """
    x = np.asarray(x, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    if x.ndim != 3 or kernel.ndim != 3:
        raise ValueError("conv3d expects a (H, W, C) input and (FH, FW, C) kernel")
    if x.shape[2] != kernel.shape[2]:
        raise ValueError(f"channel mismatch: input {x.shape[2]}, kernel {kernel.shape[2]}")
    if stride < 1 or int(stride) != stride:
        raise ValueError("stride must be a positive integer")
    if pad < 0 or int(pad) != pad:
        raise ValueError("pad must be a non-negative integer")
    fh, fw = kernel.shape[0], kernel.shape[1]
    h = x.shape[0] + 2 * pad
    w = x.shape[1] + 2 * pad
    if fh > h or fw > w:
        raise ValueError("kernel larger than the padded input")
    xp = np.pad(x, ((pad, pad), (pad, pad), (0, 0))) if pad else x
    oh = (h - fh) // stride + 1
    ow = (w - fw) // stride + 1
    out = np.zeros((oh, ow), dtype=np.float64)
    for i in range(fh):
        for j in range(fw):
            patch = xp[i : i + stride * oh : stride, j : j + stride * ow : stride, :]
            out += patch @ kernel[i, j, :]
    return out


def pool2d(x: np.ndarray, size: int, stride: int, kind: str = "max") -> np.ndarray:
    """Per-channel max or average pooling over size x size windows."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise ValueError("pool2d expects a (H, W, C) input")
    if kind not in ("max", "average"):
        raise ValueError(f"unknown pooling kind: {kind!r}")
    if size < 1 or stride < 1:
        raise ValueError("size and stride must be positive integers")
    h, w, _ = x.shape
    if size > h or size > w:
        raise ValueError("pooling window larger than the input")
    oh = (h - size) // stride + 1
    ow = (w - size) // stride + 1
    if kind == "max":
        out = np.full((oh, ow, x.shape[2]), -np.inf)
        for i in range(size):
            for j in range(size):
                patch = x[i : i + stride * oh : stride, j : j + stride * ow : stride, :]
                np.maximum(out, patch, out=out)
        return out
    out = np.zeros((oh, ow, x.shape[2]))
    for i in range(size):
        for j in range(size):
            out += x[i : i + stride * oh : stride, j : j + stride * ow : stride, :]
    return out / (size * size)


def batchnorm_forward(bn, z: np.ndarray, mode: str = "test", update_running: bool = True):
    """Normalize pre-activations z of shape (batch, width).

    Train mode normalizes with the batch mean and standard deviation
    (population variance) and updates the exponentially-weighted running
    statistics; test mode uses the running statistics.  The normalizer divides
    by (psi + sigma) with sigma the standard deviation.

    Returns (out, z_hat, sigma_used) where z_hat is the normalized input and
    sigma_used the standard deviation used, both needed by the backward pass.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2:
        raise ValueError("batchnorm_forward expects a (batch, width) array")
    if z.shape[1] != bn.gamma.shape[0]:
        raise ValueError(f"width mismatch: batch {z.shape[1]}, state {bn.gamma.shape[0]}")
    if mode == "train":
        if z.shape[0] < 2:
            raise ValueError("train-mode batch normalization needs a batch of at least 2")
        mean = z.mean(axis=0)
        var = z.var(axis=0)
        if update_running:
            m = bn.momentum
            bn.running_mean[:] = m * bn.running_mean + (1.0 - m) * mean
            bn.running_var[:] = m * bn.running_var + (1.0 - m) * var
    elif mode == "test":
        mean = bn.running_mean
        var = bn.running_var
    else:
        raise ValueError(f"unknown mode: {mode!r}")
    sigma = np.sqrt(var)
    z_hat = (z - mean) / (bn.psi + sigma)
    return bn.gamma * z_hat + bn.beta, z_hat, sigma
