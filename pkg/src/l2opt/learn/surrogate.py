"""Train networks on solver-labeled data and score them as allocators.

The trained object bundles the network with the input/target scalers fit
on the training split, so a saved model is a single self-contained file
that maps raw features to raw outputs.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..env.interference import wsee
from ..nn.engine import forward
from ..nn.network import Network
from ..solvers.assignment import InfeasibleError
from ..train.initializers import glorot_network
from ..train.loop import TrainConfig, train
from ..train.optim import make_optimizer
from .datasets import LOG_CLIP, SurrogateDataset, scenario_from_features

MODEL_FORMAT = "l2opt-surrogate"


@dataclass
class Standardizer:
    mean: np.ndarray
    std: np.ndarray      # floored so constant columns pass through unscaled

    @classmethod
    def fit(cls, x: np.ndarray) -> "Standardizer":
        x = np.asarray(x, dtype=np.float64)
        std = x.std(axis=0)
        return cls(mean=x.mean(axis=0), std=np.maximum(std, 1e-8))

    def encode(self, x):
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.std

    def decode(self, z):
        return np.asarray(z, dtype=np.float64) * self.std + self.mean

    def to_doc(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_doc(cls, doc: dict) -> "Standardizer":
        return cls(mean=np.asarray(doc["mean"], dtype=np.float64),
                   std=np.asarray(doc["std"], dtype=np.float64))


@dataclass
class SurrogateModel:
    net: Network
    x_norm: Standardizer
    y_norm: Standardizer | None = None

    def predict(self, x: np.ndarray) -> np.ndarray:
        out = forward(self.net, self.x_norm.encode(np.atleast_2d(x)), mode="test")
        return self.y_norm.decode(out) if self.y_norm is not None else out

    def save(self, path) -> None:
        doc = {
            "format": MODEL_FORMAT,
            "version": 1,
            "x_norm": self.x_norm.to_doc(),
            "y_norm": self.y_norm.to_doc() if self.y_norm is not None else None,
            "network": self.net.to_doc(),
        }
        Path(path).write_text(json.dumps(doc))

    @classmethod
    def load(cls, path) -> "SurrogateModel":
        doc = json.loads(Path(path).read_text())
        if doc.get("format") != MODEL_FORMAT or doc.get("version") != 1:
            raise ValueError(f"{path} is not a surrogate model file")
        y_doc = doc.get("y_norm")
        return cls(
            net=Network.from_doc(doc["network"]),
            x_norm=Standardizer.from_doc(doc["x_norm"]),
            y_norm=Standardizer.from_doc(y_doc) if y_doc is not None else None,
        )


# ---------------------------------------------------------------------------
# task architectures


def power_network(n_users: int, rng: np.random.Generator) -> Network:
    """Five shrinking hidden layers, exponential-linear first and on every
    odd layer, rectifiers between, linear output of one power per user."""
    return glorot_network(
        n_users * (n_users + 2),
        [128, 64, 32, 16, 8, n_users],
        ["elu", "relu", "elu", "relu", "elu", "linear"],
        rng,
    )


def association_network(n_users: int, n_bs: int, rng: np.random.Generator) -> Network:
    """Three hidden layers with a squashing middle, sigmoid output scoring
    each user/station pair in [0, 1]."""
    return glorot_network(
        n_users * n_bs + n_users + n_bs,
        [128, 64, 64, n_users * n_bs],
        ["relu", "sigmoid", "relu", "sigmoid"],
        rng,
    )


def density_network(rng: np.random.Generator, n_inputs: int = 2) -> Network:
    return glorot_network(n_inputs, [8, 8, 2, 1], ["relu", "relu", "relu", "linear"], rng)


def power3_network(rng: np.random.Generator) -> Network:
    return glorot_network(3, [8] * 5 + [1], ["relu"] * 5 + ["linear"], rng)


def train_surrogate(
    dataset: SurrogateDataset,
    net: Network,
    cfg: TrainConfig,
    rng: np.random.Generator,
    optimizer="adam",
    standardize_targets: bool = False,
):
    """Fit ``net`` on the train split, select by validation loss.

    Inputs are standardized with moments of the train split; targets too
    when ``standardize_targets`` is set (regression tasks with offset
    scales).  Falls back to validating on the train split if the dataset
    has no validation samples.  Returns (model, history).
    """
    x_tr, y_tr = dataset.subset("train")
    if x_tr.shape[0] == 0:
        raise ValueError("train split is empty")
    x_va, y_va = dataset.subset("valid")
    if x_va.shape[0] == 0:
        x_va, y_va = x_tr, y_tr
    x_norm = Standardizer.fit(x_tr)
    y_norm = Standardizer.fit(y_tr) if standardize_targets else None

    def enc_y(y):
        return y_norm.encode(y) if y_norm is not None else y

    opt = make_optimizer(optimizer) if isinstance(optimizer, str) else optimizer
    result = train(
        net,
        (x_norm.encode(x_tr), enc_y(y_tr)),
        (x_norm.encode(x_va), enc_y(y_va)),
        cfg,
        opt,
        rng,
    )
    return SurrogateModel(net=net, x_norm=x_norm, y_norm=y_norm), result


# ---------------------------------------------------------------------------
# power decode and scoring


def decode_power(x: np.ndarray, y: np.ndarray, n_users: int,
                 log_clip: float = LOG_CLIP) -> np.ndarray:
    """Map log-power outputs back to watts, projected onto each sample's
    power box read from the feature rows."""
    x = np.atleast_2d(x)
    y = np.atleast_2d(y)
    k = n_users
    lo_feat = x[:, k * k:k * k + k]
    p_min = np.where(lo_feat <= -log_clip + 1e-9, 0.0, 10.0 ** lo_feat)
    p_max = 10.0 ** x[:, k * k + k:]
    return np.clip(10.0 ** y, p_min, p_max)


def evaluate_power_surrogate(
    model: SurrogateModel,
    dataset: SurrogateDataset,
    split: str = "test",
    benchmarks: bool = True,
) -> dict:
    """Score decoded powers on each scenario of a split.

    Returns per-sample achieved objective, its ratio to the stored optimum,
    (optionally) the full-power benchmark on the same scenarios, and a
    per-budget summary with one row per distinct power ceiling.
    """
    x, _ = dataset.subset(split)
    if x.shape[0] == 0:
        raise ValueError(f"split '{split}' is empty")
    k = int(dataset.manifest["generator"]["n_users"])
    opt = dataset.extra("opt_value", split)
    powers = decode_power(x, model.predict(x), k,
                          log_clip=float(dataset.manifest.get("log_clip", LOG_CLIP)))
    achieved = np.empty(len(opt))
    full_power = np.empty(len(opt))
    for i in range(len(opt)):
        s = scenario_from_features(dataset.manifest, x[i])
        achieved[i] = wsee(s, powers[i])
        if benchmarks:
            full_power[i] = wsee(s, s.p_max_w)
    out = {
        "achieved": achieved,
        "optimal": opt,
        "ratio": achieved / opt,
        "mean_ratio": float(np.mean(achieved / opt)),
        "p_max_dbw": dataset.extra("p_max_dbw", split),
    }
    if benchmarks:
        out["full_power"] = full_power
    levels, inv = np.unique(np.round(out["p_max_dbw"], 6), return_inverse=True)
    rows = []
    for j, level in enumerate(levels):
        m = inv == j
        row = {
            "p_max_dbw": float(level),
            "ratio": float(np.mean(out["ratio"][m])),
            "achieved": float(np.mean(achieved[m])),
            "optimal": float(np.mean(opt[m])),
        }
        if benchmarks:
            row["full_power"] = float(np.mean(full_power[m]))
        rows.append(row)
    out["by_p_max"] = rows
    return out


# ---------------------------------------------------------------------------
# association decode and scoring


def decode_assignment(scores, rates, capacities, floors=None) -> np.ndarray:
    """Turn pair scores into a served-within-capacity assignment.

    Each user goes to its highest-scoring station; while some station is
    over capacity, the cheapest move (smallest rate loss, measured on the
    true rates) relocates one of its users to a station with room, or
    drops a best-effort user when nothing has room.
    """
    scores = np.asarray(scores, dtype=np.float64)
    rates = np.asarray(rates, dtype=np.float64)
    capacities = np.asarray(capacities)
    k_users, n_bs = scores.shape
    floors = np.zeros(k_users) if floors is None else np.asarray(floors, dtype=np.float64)
    assign = np.argmax(scores, axis=1)

    def load(m):
        return int(np.sum(assign == m))

    while True:
        over = [m for m in range(n_bs) if load(m) > capacities[m]]
        if not over:
            break
        m = over[0]
        best = None  # (loss, user, destination)
        for u in np.flatnonzero(assign == m):
            for m2 in range(n_bs):
                if m2 == m or load(m2) >= capacities[m2]:
                    continue
                loss = rates[u, m] - rates[u, m2]
                if best is None or loss < best[0]:
                    best = (loss, u, m2)
            if floors[u] <= 0.0:
                loss = rates[u, m]
                if best is None or loss < best[0]:
                    best = (loss, u, -1)
        if best is None:
            raise InfeasibleError("no station has room and every user has a floor")
        assign[best[1]] = best[2]
    served = assign >= 0
    if np.any(floors[~served] > 0.0):
        raise InfeasibleError("dropped a user whose floor is positive")
    return assign


def _assign_from_rows(rows: np.ndarray) -> np.ndarray:
    """Assignment vector from binary matrix rows; all-zero row = unserved."""
    assign = np.argmax(rows, axis=1)
    assign[rows.max(axis=1) < 0.5] = -1
    return assign


def evaluate_association(model: SurrogateModel, dataset: SurrogateDataset,
                         split: str = "test") -> dict:
    """Decode scores on a split and compare against the labeled optimum.

    Reports sum-rate ratios, the fraction of exactly recovered assignments,
    and the pooled per-user served rates for both (for distribution plots).
    """
    x, y = dataset.subset(split)
    if x.shape[0] == 0:
        raise ValueError(f"split '{split}' is empty")
    gen = dataset.manifest["generator"]
    k, m = int(gen["n_users"]), int(gen["n_bs"])
    opt_rate = dataset.extra("opt_rate", split)
    scores = model.predict(x).reshape(-1, k, m)

    n = x.shape[0]
    ann_rate = np.empty(n)
    match = np.zeros(n, dtype=bool)
    rates_ann = np.zeros((n, k))
    rates_opt = np.zeros((n, k))
    for i in range(n):
        rates = x[i, :k * m].reshape(k, m)
        floors = x[i, k * m:k * m + k]
        caps = np.rint(x[i, k * m + k:]).astype(int)
        assign = decode_assignment(scores[i], rates, caps, floors)
        given = _assign_from_rows(y[i].reshape(k, m))
        match[i] = np.array_equal(assign, given)
        users = np.arange(k)
        rates_ann[i][assign >= 0] = rates[users[assign >= 0], assign[assign >= 0]]
        rates_opt[i][given >= 0] = rates[users[given >= 0], given[given >= 0]]
        ann_rate[i] = rates_ann[i].sum()
    return {
        "ann_rate": ann_rate,
        "opt_rate": opt_rate,
        "ratio": ann_rate / opt_rate,
        "mean_ratio": float(np.mean(ann_rate / opt_rate)),
        "match": float(np.mean(match)),
        "rates_ann": rates_ann.ravel(),
        "rates_opt": rates_opt.ravel(),
    }
