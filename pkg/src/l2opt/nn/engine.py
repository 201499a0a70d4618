"""Forward and backward passes for dense networks.

The reference implementation is pure numpy; eligible calls (plain layers, no
batch norm, no dropout masks) are routed to the compiled kernels when those
are available.  Gradients are returned as a flat list of arrays aligned with
``Network.trainable_arrays()``; mini-batch gradients are the mean over the
per-sample gradients.

Batch-norm layers are differentiated with their normalization statistics held
fixed: per-sample calls use the running statistics (test-mode transform), and
train-mode batch calls use the batch statistics of that forward pass as
constants.  Biases under batch norm are frozen at zero, so the trainable set
there is (weights, gamma, beta).
"""
from __future__ import annotations

import numpy as np

from . import backend
from .functional import CE_CLAMP, CROSS_ENTROPY, MSE, batch_loss, batchnorm_forward
from .network import Network


def _as_batch(net: Network, x) -> np.ndarray:
    X = np.ascontiguousarray(x, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != net.input_width:
        raise ValueError(f"input width {X.shape} does not match network input {net.input_width}")
    return X


def _forward_py(net: Network, X: np.ndarray, mode: str, masks, update_running: bool):
    """Returns (output, caches); caches hold per-layer intermediates."""
    caches = []
    a = X
    n_layers = len(net.layers)
    for i, layer in enumerate(net.layers):
        z = a @ layer.weights + layer.biases
        if layer.batch_norm is not None:
            u, z_hat, sigma = batchnorm_forward(
                layer.batch_norm, z, mode=mode, update_running=update_running
            )
        else:
            u, z_hat, sigma = z, None, None
        out = layer.activation.value(u)
        mask = None
        if masks is not None and i < n_layers - 1:
            mask = masks[i]
            out = out * mask
        caches.append({"a_prev": a, "u": u, "z_hat": z_hat, "sigma": sigma, "mask": mask})
        a = out
    return a, caches


def _backward_py(net: Network, caches, d_out: np.ndarray) -> list[np.ndarray]:
    """Backward pass from dL/d(output); d_out already carries any 1/batch factor."""
    grads_rev: list[np.ndarray] = []
    d_a = d_out
    for layer, cache in zip(reversed(net.layers), reversed(caches)):
        d_u = d_a * layer.activation.grad(cache["u"])
        if cache["mask"] is not None:
            d_u = d_u * cache["mask"]
        bn = layer.batch_norm
        if bn is not None:
            d_beta = d_u.sum(axis=0)
            d_gamma = (d_u * cache["z_hat"]).sum(axis=0)
            d_z = d_u * (bn.gamma / (bn.psi + cache["sigma"]))
            d_w = cache["a_prev"].T @ d_z
            grads_rev.extend([d_beta, d_gamma, d_w])
        else:
            d_z = d_u
            d_b = d_z.sum(axis=0)
            d_w = cache["a_prev"].T @ d_z
            grads_rev.extend([d_b, d_w])
        d_a = d_z @ layer.weights.T
    return list(reversed(grads_rev))


def forward(net: Network, x, mode: str = "test") -> np.ndarray:
    """Network output for a single sample (1-D) or a batch (2-D).

    Inference call: batch-norm layers use running statistics unless
    ``mode='train'`` is requested explicitly, and running statistics are never
    updated here.  No dropout.
    """
    X = _as_batch(net, x)
    single = np.ndim(x) == 1
    if backend.fast_path_ok(net, None):
        out = backend.module().net_forward(*_kernel_args(net, X), False)[0]
    else:
        out, _ = _forward_py(net, X, mode, None, update_running=False)
    return out[0] if single else out


def _kernel_args(net: Network, X: np.ndarray):
    Ws = [l.weights for l in net.layers]
    bs = [l.biases for l in net.layers]
    codes = np.array([l.activation.code for l in net.layers], dtype=np.int64)
    params = np.array([l.activation.param for l in net.layers], dtype=np.float64)
    return Ws, bs, codes, params, X


def _loss_grad_batch(kind: str, targets: np.ndarray, preds: np.ndarray) -> np.ndarray:
    if kind == MSE:
        return 2.0 * (preds - targets)
    if kind == CROSS_ENTROPY:
        if np.any(targets < 0.0) or np.any(targets > 1.0):
            raise ValueError("cross_entropy targets must lie in [0, 1]")
        if np.any(preds < 0.0) or np.any(preds > 1.0):
            raise ValueError("cross_entropy predictions must lie in [0, 1]")
        p = np.clip(preds, CE_CLAMP, 1.0 - CE_CLAMP)
        return -targets / p + (1.0 - targets) / (1.0 - p)
    raise ValueError(f"unknown loss kind: {kind!r}")


def backprop(net: Network, x, target, loss: str) -> list[np.ndarray]:
    """Per-sample gradients of the loss w.r.t. the trainable arrays."""
    X = _as_batch(net, x)
    if X.shape[0] != 1:
        raise ValueError("backprop takes a single sample; use batch_gradient for batches")
    target = np.asarray(target, dtype=np.float64).reshape(1, -1)
    grads, _ = _gradient(net, X, target, loss, mode="test", masks=None, update_running=False)
    return grads


def batch_gradient(
    net: Network,
    X,
    Y,
    loss: str,
    reg: tuple[int, float] | None = None,
    masks=None,
    rng=None,
    dropout_keep: float | None = None,
    update_running: bool = True,
):
    """Mean per-sample gradients over a mini-batch, plus the batch data loss.

    ``reg`` is (p, phi) adding phi * ||W||_p^p over the weight matrices to the
    loss; its gradient (2*phi*W for p=2, phi*sign(W) for p=1) is added to the
    weight gradients.  Dropout masks may be passed explicitly or drawn here
    from ``rng`` with keep probability ``dropout_keep``.
    """
    X = _as_batch(net, X)
    Y = np.ascontiguousarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[None, :]
    if Y.shape != (X.shape[0], net.output_width):
        raise ValueError(f"target shape {Y.shape} does not match batch/output widths")
    if masks is None and dropout_keep is not None:
        masks = draw_dropout_masks(net, X.shape[0], dropout_keep, rng)
    mode = "train" if net.has_batch_norm else "test"
    grads, value = _gradient(net, X, Y, loss, mode, masks, update_running)
    if reg is not None:
        p, phi = reg
        if p not in (1, 2):
            raise ValueError("regularization order must be 1 or 2")
        value = value + sum(
            phi * float(np.sum(np.abs(l.weights) ** p)) for l in net.layers
        )
        gi = 0
        for layer in net.layers:
            if p == 2:
                grads[gi] += 2.0 * phi * layer.weights
            else:
                grads[gi] += phi * np.sign(layer.weights)
            gi += 2 if layer.batch_norm is None else 3
    return grads, value


def _gradient(net, X, Y, loss, mode, masks, update_running):
    fast = backend.fast_path_ok(net, masks)
    if fast:
        mod = backend.module()
        Ws, bs, codes, params, Xc = _kernel_args(net, X)
        out, zs, activations = mod.net_forward(Ws, bs, codes, params, Xc, True)
        d_out = _loss_grad_batch(loss, Y, out) / X.shape[0]
        grads = mod.net_backward(Ws, codes, params, Xc, zs, activations, d_out)
    else:
        out, caches = _forward_py(net, X, mode, masks, update_running)
        d_out = _loss_grad_batch(loss, Y, out) / X.shape[0]
        grads = _backward_py(net, caches, d_out)
    return grads, batch_loss(loss, Y, out)


def backward_from_output(net: Network, X, d_out, masks=None) -> list[np.ndarray]:
    """Gradients given dL/d(output) directly (shape (batch, output_width)).

    The caller supplies any 1/batch scaling inside ``d_out``.
    """
    X = _as_batch(net, X)
    d_out = np.ascontiguousarray(d_out, dtype=np.float64)
    if d_out.shape != (X.shape[0], net.output_width):
        raise ValueError("output-gradient shape does not match the batch")
    if backend.fast_path_ok(net, masks):
        mod = backend.module()
        Ws, bs, codes, params, Xc = _kernel_args(net, X)
        _, zs, activations = mod.net_forward(Ws, bs, codes, params, Xc, True)
        return mod.net_backward(Ws, codes, params, Xc, zs, activations, d_out)
    mode = "train" if net.has_batch_norm else "test"
    _, caches = _forward_py(net, X, mode, masks, update_running=False)
    return _backward_py(net, caches, d_out)


def draw_dropout_masks(net: Network, batch: int, keep: float, rng) -> list[np.ndarray]:
    """Per-sample 0/1 keep masks for every hidden layer (output excluded)."""
    if not 0.0 < keep <= 1.0:
        raise ValueError("dropout keep probability must lie in (0, 1]")
    if rng is None:
        raise ValueError("dropout needs a random generator")
    masks = []
    for layer in net.layers[:-1]:
        masks.append((rng.random((batch, layer.n_out)) < keep).astype(np.float64))
    return masks
