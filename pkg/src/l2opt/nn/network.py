"""Dense feed-forward network container and its JSON serialization.

Weights of layer l have shape (n_in, n_out): column n holds the incoming
weight vector of neuron n, so a batch forward pass is X @ W + b.  When a layer
carries batch normalization its biases are fixed at zero (the shift is beta).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .activations import Activation

FORMAT_NAME = "l2opt-network"
FORMAT_VERSION = 1


class NetworkFormatError(ValueError):
    """Raised for malformed, inconsistent or non-finite network documents."""


@dataclass
class BatchNorm:
    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    psi: float = 1e-8
    momentum: float = 0.9

    @classmethod
    def identity(cls, width: int, psi: float = 1e-8, momentum: float = 0.9) -> "BatchNorm":
        return cls(
            gamma=np.ones(width),
            beta=np.zeros(width),
            running_mean=np.zeros(width),
            running_var=np.ones(width),
            psi=psi,
            momentum=momentum,
        )

    def copy(self) -> "BatchNorm":
        return BatchNorm(
            self.gamma.copy(),
            self.beta.copy(),
            self.running_mean.copy(),
            self.running_var.copy(),
            self.psi,
            self.momentum,
        )


@dataclass
class DenseLayer:
    weights: np.ndarray
    biases: np.ndarray
    activation: Activation
    batch_norm: BatchNorm | None = None

    def __post_init__(self):
        self.weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        self.biases = np.ascontiguousarray(self.biases, dtype=np.float64)
        if self.weights.ndim != 2:
            raise ValueError("layer weights must be a (n_in, n_out) matrix")
        if self.biases.shape != (self.weights.shape[1],):
            raise ValueError(
                f"bias width {self.biases.shape} does not match weights {self.weights.shape}"
            )
        if self.batch_norm is not None and np.any(self.biases != 0.0):
            raise ValueError("layers with batch normalization must keep zero biases")

    @property
    def n_in(self) -> int:
        return self.weights.shape[0]

    @property
    def n_out(self) -> int:
        return self.weights.shape[1]

    def copy(self) -> "DenseLayer":
        bn = self.batch_norm.copy() if self.batch_norm is not None else None
        return DenseLayer(self.weights.copy(), self.biases.copy(), self.activation, bn)


@dataclass
class Network:
    input_width: int
    layers: list[DenseLayer] = field(default_factory=list)

    def __post_init__(self):
        if self.input_width < 1:
            raise ValueError("input width must be positive")
        if not self.layers:
            raise ValueError("a network needs at least one layer")
        prev = self.input_width
        for i, layer in enumerate(self.layers):
            if layer.n_in != prev:
                raise ValueError(
                    f"layer {i} expects input width {layer.n_in}, previous width is {prev}"
                )
            prev = layer.n_out

    @property
    def output_width(self) -> int:
        return self.layers[-1].n_out

    @property
    def widths(self) -> list[int]:
        return [self.input_width] + [l.n_out for l in self.layers]

    @property
    def has_batch_norm(self) -> bool:
        return any(l.batch_norm is not None for l in self.layers)

    def copy(self) -> "Network":
        return Network(self.input_width, [l.copy() for l in self.layers])

    def trainable_arrays(self) -> list[np.ndarray]:
        """Views of the trainable parameter arrays, in a fixed order.

        Per layer: weights, then biases (skipped under batch norm, where they
        are frozen at zero), then gamma and beta when present.
        """
        arrays: list[np.ndarray] = []
        for layer in self.layers:
            arrays.append(layer.weights)
            if layer.batch_norm is None:
                arrays.append(layer.biases)
            else:
                arrays.append(layer.batch_norm.gamma)
                arrays.append(layer.batch_norm.beta)
        return arrays

    def n_parameters(self) -> int:
        return sum(a.size for a in self.trainable_arrays())

    def snapshot(self) -> list[np.ndarray]:
        return [a.copy() for a in self.trainable_arrays()]

    def restore(self, snap: list[np.ndarray]) -> None:
        arrays = self.trainable_arrays()
        if len(arrays) != len(snap):
            raise ValueError("snapshot does not match the network structure")
        for a, s in zip(arrays, snap):
            if a.shape != s.shape:
                raise ValueError("snapshot does not match the network structure")
            a[:] = s

    # -- serialization -----------------------------------------------------

    def to_doc(self) -> dict:
        layers = []
        for layer in self.layers:
            doc = {
                "weights": _finite_list(layer.weights, "weights"),
                "biases": _finite_list(layer.biases, "biases"),
                "activation": {
                    "kind": layer.activation.kind,
                    "leak": layer.activation.leak,
                    "alpha": layer.activation.alpha,
                },
            }
            bn = layer.batch_norm
            doc["batch_norm"] = (
                None
                if bn is None
                else {
                    "gamma": _finite_list(bn.gamma, "gamma"),
                    "beta": _finite_list(bn.beta, "beta"),
                    "running_mean": _finite_list(bn.running_mean, "running_mean"),
                    "running_var": _finite_list(bn.running_var, "running_var"),
                    "psi": bn.psi,
                    "momentum": bn.momentum,
                }
            )
            layers.append(doc)
        return {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "input_width": self.input_width,
            "layers": layers,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "Network":
        if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
            raise NetworkFormatError("not a network document")
        if doc.get("version") != FORMAT_VERSION:
            raise NetworkFormatError(f"unsupported network format version: {doc.get('version')!r}")
        try:
            layers = []
            for ldoc in doc["layers"]:
                act = ldoc["activation"]
                bn_doc = ldoc.get("batch_norm")
                bn = None
                if bn_doc is not None:
                    bn = BatchNorm(
                        gamma=_finite_array(bn_doc["gamma"], "gamma"),
                        beta=_finite_array(bn_doc["beta"], "beta"),
                        running_mean=_finite_array(bn_doc["running_mean"], "running_mean"),
                        running_var=_finite_array(bn_doc["running_var"], "running_var"),
                        psi=float(bn_doc["psi"]),
                        momentum=float(bn_doc["momentum"]),
                    )
                layers.append(
                    DenseLayer(
                        weights=_finite_array(ldoc["weights"], "weights"),
                        biases=_finite_array(ldoc["biases"], "biases"),
                        activation=Activation(
                            act["kind"], leak=float(act["leak"]), alpha=float(act["alpha"])
                        ),
                        batch_norm=bn,
                    )
                )
            return cls(int(doc["input_width"]), layers)
        except NetworkFormatError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise NetworkFormatError(f"malformed network document: {exc}") from exc

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_doc(), fh)

    @classmethod
    def load(cls, path) -> "Network":
        with open(path) as fh:
            return cls.from_doc(json.load(fh))


def _finite_list(a: np.ndarray, name: str) -> list:
    if not np.all(np.isfinite(a)):
        raise NetworkFormatError(f"non-finite values in {name}")
    return a.tolist()


def _finite_array(values, name: str) -> np.ndarray:
    a = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        raise NetworkFormatError(f"non-finite values in {name}")
    return a
