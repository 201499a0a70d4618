"""Scalar activation functions applied elementwise by dense layers.

Each activation has a value and a derivative defined on all of R.  The
derivative at kink points follows the convention of the z <= 0 branch:
relu'(0) = 0, leaky_relu'(0) = leak, elu'(0) = alpha.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LINEAR = "linear"
RELU = "relu"
LEAKY_RELU = "leaky_relu"
ELU = "elu"
SIGMOID = "sigmoid"
TANH = "tanh"

KINDS = (LINEAR, RELU, LEAKY_RELU, ELU, SIGMOID, TANH)

# Integer codes shared with the compiled kernels.
KIND_CODES = {k: i for i, k in enumerate(KINDS)}


def _sigmoid(z):
    # Overflow-safe: only exponentiate non-positive arguments.
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass(frozen=True)
class Activation:
    """Activation kind plus its shape parameters.

    ``leak`` is the negative-side slope of leaky_relu; ``alpha`` scales the
    negative branch of elu.  Both are ignored by the other kinds.
    """

    kind: str
    leak: float = 0.01
    alpha: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown activation kind: {self.kind!r}")

    @property
    def code(self) -> int:
        return KIND_CODES[self.kind]

    @property
    def param(self) -> float:
        """The single shape parameter the compiled kernels consume."""
        if self.kind == LEAKY_RELU:
            return self.leak
        if self.kind == ELU:
            return self.alpha
        return 0.0

    def value(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        if self.kind == LINEAR:
            return z.copy()
        if self.kind == RELU:
            return np.maximum(z, 0.0)
        if self.kind == LEAKY_RELU:
            return np.maximum(z, 0.0) + self.leak * np.minimum(z, 0.0)
        if self.kind == ELU:
            out = z.copy()
            neg = z <= 0
            out[neg] = self.alpha * np.expm1(z[neg])
            return out
        if self.kind == SIGMOID:
            return _sigmoid(z)
        return np.tanh(z)

    def grad(self, z: np.ndarray) -> np.ndarray:
        """Derivative evaluated at the pre-activation z."""
        z = np.asarray(z, dtype=np.float64)
        if self.kind == LINEAR:
            return np.ones_like(z)
        if self.kind == RELU:
            return (z > 0).astype(np.float64)
        if self.kind == LEAKY_RELU:
            return np.where(z > 0, 1.0, self.leak)
        if self.kind == ELU:
            out = np.ones_like(z)
            neg = z <= 0
            out[neg] = self.alpha * np.exp(z[neg])
            return out
        if self.kind == SIGMOID:
            s = _sigmoid(z)
            return s * (1.0 - s)
        t = np.tanh(z)
        return 1.0 - t * t


def activation(kind: str, **params) -> Activation:
    return Activation(kind, **params)
