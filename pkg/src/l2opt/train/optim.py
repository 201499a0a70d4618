"""First-order optimizers operating on flat lists of parameter arrays.

``step`` mutates the parameter arrays in place.  State accumulators are
allocated lazily on the first step and keyed by position, so an optimizer
instance is tied to one parameter list.  Nesterov evaluates the gradient at
the lookahead point: callers apply ``grad_shift`` before the gradient pass
(the training loop shifts parameters temporarily and restores them).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..nn import backend


def _check(params, grads, state):
    if len(params) != len(grads):
        raise ValueError("parameter and gradient lists differ in length")
    if state is not None and len(state) != len(params):
        raise ValueError("optimizer state does not match the parameter list")


class Optimizer:
    name = "base"

    def step(self, params: list[np.ndarray], grads: list[np.ndarray], lr: float) -> None:
        raise NotImplementedError

    def grad_shift(self, params: list[np.ndarray]):
        """Shift arrays to add before the gradient pass (None for most kinds)."""
        return None


class Sgd(Optimizer):
    name = "sgd"

    def step(self, params, grads, lr):
        _check(params, grads, None)
        for p, g in zip(params, grads):
            p -= lr * g


class Momentum(Optimizer):
    """Heavy-ball: v <- delta*v - lr*g; p <- p + v."""

    name = "momentum"

    def __init__(self, delta: float = 0.9):
        self.delta = delta
        self.velocity = None

    def step(self, params, grads, lr):
        if self.velocity is None:
            self.velocity = [np.zeros_like(p) for p in params]
        _check(params, grads, self.velocity)
        for p, g, v in zip(params, grads, self.velocity):
            v *= self.delta
            v -= lr * g
            p += v


class Nesterov(Momentum):
    """Momentum with the gradient evaluated at params + delta*velocity."""

    name = "nesterov"

    def grad_shift(self, params):
        if self.velocity is None:
            self.velocity = [np.zeros_like(p) for p in params]
        return [self.delta * v for v in self.velocity]


class AdaGrad(Optimizer):
    """Accumulates squared gradients: p <- p - lr * g / (beta + sqrt(r))."""

    name = "adagrad"

    def __init__(self, beta: float = 1e-7):
        self.beta = beta
        self.accum = None

    def step(self, params, grads, lr):
        if self.accum is None:
            self.accum = [np.zeros_like(p) for p in params]
        _check(params, grads, self.accum)
        for p, g, r in zip(params, grads, self.accum):
            r += g * g
            p -= lr * g / (self.beta + np.sqrt(r))


class RmsProp(Optimizer):
    """Exponentially-weighted squared gradients with decay rho."""

    name = "rmsprop"

    def __init__(self, beta: float = 1e-8, rho: float = 0.9):
        self.beta = beta
        self.rho = rho
        self.accum = None

    def step(self, params, grads, lr):
        if self.accum is None:
            self.accum = [np.zeros_like(p) for p in params]
        _check(params, grads, self.accum)
        for p, g, r in zip(params, grads, self.accum):
            r *= self.rho
            r += (1.0 - self.rho) * g * g
            p -= lr * g / (self.beta + np.sqrt(r))


class Adam(Optimizer):
    """Bias-corrected first/second moment estimates.

    First step moves each coordinate by about -lr * sign(g):
    s_hat = g, r_hat = g*g, update = -lr * g / (beta + |g|).
    """

    name = "adam"

    def __init__(self, beta: float = 1e-8, rho1: float = 0.9, rho2: float = 0.999):
        self.beta = beta
        self.rho1 = rho1
        self.rho2 = rho2
        self.t = 0
        self.first = None
        self.second = None

    def step(self, params, grads, lr):
        if self.first is None:
            self.first = [np.zeros_like(p) for p in params]
            self.second = [np.zeros_like(p) for p in params]
        _check(params, grads, self.first)
        self.t += 1
        bc1 = 1.0 - self.rho1**self.t
        bc2 = 1.0 - self.rho2**self.t
        fast = backend.active_or_none()
        for p, g, s, r in zip(params, grads, self.first, self.second):
            if fast is not None and p.flags.c_contiguous and g.flags.c_contiguous:
                fast.adam_step(
                    p.reshape(-1), g.reshape(-1), s.reshape(-1), r.reshape(-1),
                    bc1, bc2, lr, self.beta, self.rho1, self.rho2,
                )
            else:
                s *= self.rho1
                s += (1.0 - self.rho1) * g
                r *= self.rho2
                r += (1.0 - self.rho2) * g * g
                p -= lr * (s / bc1) / (self.beta + np.sqrt(r / bc2))


OPTIMIZERS = {
    cls.name: cls for cls in (Sgd, Momentum, Nesterov, AdaGrad, RmsProp, Adam)
}


def make_optimizer(name: str, **kwargs) -> Optimizer:
    try:
        cls = OPTIMIZERS[name]
    except KeyError:
        raise ValueError(f"unknown optimizer: {name!r}") from None
    return cls(**kwargs)


@dataclass(frozen=True)
class LrSchedule:
    """Linear ramp from alpha0 to alpha_final over ``steps`` updates, then flat.

    ``steps`` None means a constant rate; alpha_final defaults to alpha0/100.
    """

    alpha0: float
    steps: int | None = None
    alpha_final: float | None = None

    def value(self, k: int) -> float:
        if self.steps is None or self.steps <= 0:
            return self.alpha0
        final = self.alpha0 / 100.0 if self.alpha_final is None else self.alpha_final
        if k >= self.steps:
            return final
        frac = k / self.steps
        return (1.0 - frac) * self.alpha0 + frac * final
