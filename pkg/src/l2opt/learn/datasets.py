"""Solver-labeled datasets for training allocation surrogates.

Every sample is produced from its own random stream seeded with
``SeedSequence([seed, split_id, sample_index])``, so datasets are
reproducible bit-for-bit, splits are statistically independent, and any
single sample can be regenerated without building the rest.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..env.association import AssociationConfig, generate_association
from ..env.cellular import AnalyticEeModel, CellularConfig
from ..env.interference import InterferenceConfig, InterferenceScenario, generate_scenario
from ..solvers.assignment import InfeasibleError, assignment_matrix, solve_association_bruteforce
from ..solvers.density import empirical_optimal_density, optimal_density
from ..solvers.wsee import solve_wsee_global, solve_wsee_sca

SPLITS = ("train", "valid", "test")
FORMAT_NAME = "l2opt-dataset"
LOG_CLIP = 20.0


def _sample_rng(seed: int, split_id: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, split_id, index]))


def _norm_counts(counts) -> dict:
    if not isinstance(counts, dict):
        counts = dict(zip(SPLITS, counts))
    unknown = set(counts) - set(SPLITS)
    if unknown:
        raise ValueError(f"unknown split names: {sorted(unknown)}")
    return {name: int(counts.get(name, 0)) for name in SPLITS}


@dataclass
class SurrogateDataset:
    """Feature/target arrays with split tags and a provenance manifest."""

    inputs: np.ndarray            # (n, d)
    targets: np.ndarray           # (n, t)
    splits: np.ndarray            # (n,) int8 index into SPLITS
    manifest: dict
    extras: dict = field(default_factory=dict)   # named per-sample side arrays

    def __len__(self) -> int:
        return self.inputs.shape[0]

    def mask(self, split: str) -> np.ndarray:
        return self.splits == SPLITS.index(split)

    def subset(self, split: str):
        m = self.mask(split)
        return self.inputs[m], self.targets[m]

    def extra(self, name: str, split: str | None = None) -> np.ndarray:
        arr = self.extras[name]
        return arr if split is None else arr[self.mask(split)]

    def save(self, directory) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        doc = dict(self.manifest)
        doc.setdefault("format", FORMAT_NAME)
        doc.setdefault("version", 1)
        doc["extras"] = sorted(self.extras)
        (d / "manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True))
        np.save(d / "inputs.npy", self.inputs)
        np.save(d / "targets.npy", self.targets)
        np.save(d / "splits.npy", self.splits)
        for name, arr in self.extras.items():
            np.save(d / f"extra_{name}.npy", arr)

    @classmethod
    def load(cls, directory) -> "SurrogateDataset":
        d = Path(directory)
        doc = json.loads((d / "manifest.json").read_text())
        if doc.get("format") != FORMAT_NAME:
            raise ValueError(f"{d} is not a dataset directory")
        extras = {name: np.load(d / f"extra_{name}.npy") for name in doc.pop("extras", [])}
        return cls(
            inputs=np.load(d / "inputs.npy"),
            targets=np.load(d / "targets.npy"),
            splits=np.load(d / "splits.npy"),
            manifest=doc,
            extras=extras,
        )


def _assemble(rows_x, rows_y, split_ids, manifest, extras=None) -> SurrogateDataset:
    return SurrogateDataset(
        inputs=np.asarray(rows_x, dtype=np.float64),
        targets=np.asarray(rows_y, dtype=np.float64),
        splits=np.asarray(split_ids, dtype=np.int8),
        manifest=manifest,
        extras={k: np.asarray(v) for k, v in (extras or {}).items()},
    )


# ---------------------------------------------------------------------------
# power control


def power_features(s: InterferenceScenario, log_clip: float = LOG_CLIP) -> np.ndarray:
    """Flat feature row: log10 gain matrix (row-major), then per-user
    log10 lower and upper power limits, lower limits floored at -log_clip."""
    floor = 10.0 ** (-log_clip)
    return np.concatenate([
        np.log10(s.gains).ravel(),
        np.log10(np.maximum(s.p_min_w, floor)),
        np.log10(s.p_max_w),
    ])


def power_targets(p: np.ndarray, log_clip: float = LOG_CLIP) -> np.ndarray:
    return np.maximum(np.log10(np.maximum(p, 1e-300)), -log_clip)


def scenario_from_features(manifest: dict, x: np.ndarray) -> InterferenceScenario:
    """Rebuild the effective network a feature row came from.

    Gains and power limits are read back from the row; everything that is
    constant across the dataset (noise, weights, power model, bandwidth)
    comes from the generator settings stored in the manifest.
    """
    gen = manifest["generator"]
    k = int(gen["n_users"])
    if x.shape != (k * (k + 2),):
        raise ValueError(f"expected feature row of width {k * (k + 2)}")
    clip = float(manifest.get("log_clip", LOG_CLIP))
    lo = x[k * k:k * k + k]
    cfg = InterferenceConfig(**gen)
    from ..env.interference import noise_power_w

    return InterferenceScenario(
        gains=10.0 ** x[:k * k].reshape(k, k),
        noise_w=noise_power_w(cfg),
        weights=np.full(k, cfg.weight),
        static_power_w=np.full(k, cfg.static_power_w),
        power_scale=np.full(k, cfg.power_scale),
        p_min_w=np.where(lo <= -clip + 1e-9, 0.0, 10.0 ** lo),
        p_max_w=10.0 ** x[k * k + k:],
        bandwidth_hz=cfg.bandwidth_hz,
    )


def build_power_dataset(
    cfg: InterferenceConfig,
    counts,
    seed: int,
    p_max_dbw=None,
    solver: str = "global",
    points_per_user: int = 64,
    log_clip: float = LOG_CLIP,
) -> SurrogateDataset:
    """Draw scenarios, solve each for the best powers, store (features, labels).

    ``p_max_dbw`` sets the per-sample power budget: None keeps the config
    ceiling, a (lo, hi) pair draws uniformly in dBW, and an explicit array
    is cycled through in sample order.
    """
    counts = _norm_counts(counts)
    if solver not in ("global", "sca"):
        raise ValueError("solver must be 'global' or 'sca'")
    budgets = None
    if p_max_dbw is not None and not (isinstance(p_max_dbw, tuple) and len(p_max_dbw) == 2):
        budgets = np.atleast_1d(np.asarray(p_max_dbw, dtype=np.float64))

    rows_x, rows_y, split_ids, opt_vals, budget_used = [], [], [], [], []
    for split_id, name in enumerate(SPLITS):
        for i in range(counts[name]):
            rng = _sample_rng(seed, split_id, i)
            if budgets is not None:
                dbw = float(budgets[i % len(budgets)])
            elif p_max_dbw is not None:
                dbw = float(rng.uniform(*p_max_dbw))
            else:
                dbw = 10.0 * np.log10(cfg.p_max_w)
            s = generate_scenario(cfg, rng, p_max_w=10.0 ** (dbw / 10.0))
            if solver == "global":
                sol = solve_wsee_global(s, points_per_user=points_per_user)
            else:
                sol = solve_wsee_sca(s)
            rows_x.append(power_features(s, log_clip))
            rows_y.append(power_targets(sol.p, log_clip))
            split_ids.append(split_id)
            opt_vals.append(sol.value)
            budget_used.append(dbw)

    manifest = {
        "format": FORMAT_NAME,
        "version": 1,
        "task": "power",
        "seed": int(seed),
        "counts": counts,
        "generator": dataclasses.asdict(cfg),
        "solver": {"name": solver, "points_per_user": points_per_user},
        "log_clip": log_clip,
        "layout": {
            "inputs": "log10 gains row-major (K*K), log10 p_min (K), log10 p_max (K)",
            "targets": "log10 optimal powers, floored at -log_clip",
        },
    }
    return _assemble(rows_x, rows_y, split_ids, manifest,
                     extras={"opt_value": opt_vals, "p_max_dbw": budget_used})


# ---------------------------------------------------------------------------
# user association


def assoc_features(rates, floors, capacities) -> np.ndarray:
    return np.concatenate([
        np.asarray(rates, dtype=np.float64).ravel(),
        np.asarray(floors, dtype=np.float64),
        np.asarray(capacities, dtype=np.float64),
    ])


def build_assoc_dataset(
    cfg: AssociationConfig,
    counts,
    seed: int,
    floors=None,
    capacities=None,
    max_retries: int = 100,
) -> SurrogateDataset:
    """Draw association instances, label each with the exhaustive optimum.

    Instances whose floors cannot be met are redrawn from the same stream,
    so the dataset contains only solvable problems.
    """
    counts = _norm_counts(counts)
    rows_x, rows_y, split_ids, opt_rates = [], [], [], []
    for split_id, name in enumerate(SPLITS):
        for i in range(counts[name]):
            rng = _sample_rng(seed, split_id, i)
            for _ in range(max_retries):
                inst = generate_association(cfg, rng, floors=floors, capacities=capacities)
                try:
                    sol = solve_association_bruteforce(inst)
                except InfeasibleError:
                    continue
                break
            else:
                raise InfeasibleError(f"no feasible instance in {max_retries} draws")
            rows_x.append(assoc_features(inst.rates, inst.floors, inst.capacities))
            rows_y.append(assignment_matrix(sol.assign, cfg.n_bs).ravel())
            split_ids.append(split_id)
            opt_rates.append(sol.sum_rate)

    manifest = {
        "format": FORMAT_NAME,
        "version": 1,
        "task": "association",
        "seed": int(seed),
        "counts": counts,
        "generator": dataclasses.asdict(cfg),
        "layout": {
            "inputs": "rates row-major (K*M), floors (K), capacities (M)",
            "targets": "binary assignment matrix row-major (K*M)",
        },
    }
    return _assemble(rows_x, rows_y, split_ids, manifest, extras={"opt_rate": opt_rates})


# ---------------------------------------------------------------------------
# deployment density (transfer-learning tasks)


def _log_uniform(rng, lo, hi) -> float:
    return float(10.0 ** rng.uniform(np.log10(lo), np.log10(hi)))


def build_density_dataset(
    counts,
    seed: int,
    kind: str = "model",
    model: AnalyticEeModel | None = None,
    deploy: CellularConfig | None = None,
    mt_range=(3e-6, 3e-4),
    p_idle_range_w=(0.05, 3.0),
    density_bounds=(1e-6, 1e-3),
    n_densities: int = 28,
    n_realizations=30,
) -> SurrogateDataset:
    """(Terminal density, idle draw) -> log10 of the EE-best station density.

    kind 'model' labels with the closed-form random-deployment curve;
    kind 'grid' labels by Monte-Carlo search over regular-grid layouts,
    standing in for field measurements of the deployed system.  The two
    label rules share their trends but sit a systematic, input-dependent
    offset apart, which is the gap refinement is meant to close.
    ``n_realizations`` may be a per-split dict, so measured training
    labels can be kept scarcer and noisier than evaluation labels.
    """
    counts = _norm_counts(counts)
    if kind not in ("model", "grid"):
        raise ValueError("kind must be 'model' or 'grid'")
    model = model if model is not None else AnalyticEeModel()
    deploy = deploy if deploy is not None else CellularConfig(kind="grid", window_m=1000.0)
    lambdas = np.geomspace(*density_bounds, n_densities)
    if not isinstance(n_realizations, dict):
        n_realizations = {name: int(n_realizations) for name in SPLITS}

    rows_x, rows_y, split_ids = [], [], []
    for split_id, name in enumerate(SPLITS):
        for i in range(counts[name]):
            rng = _sample_rng(seed, split_id, i)
            mt = _log_uniform(rng, *mt_range)
            p_idle = _log_uniform(rng, *p_idle_range_w)
            if kind == "model":
                lam, _ = optimal_density(
                    dataclasses.replace(model, mt_density=mt, p_idle_w=p_idle),
                    lo=density_bounds[0], hi=density_bounds[1])
            else:
                lam, _ = empirical_optimal_density(
                    dataclasses.replace(deploy, mt_density=mt, p_idle_w=p_idle),
                    rng, lambdas, n_realizations[name])
            rows_x.append([np.log10(mt), np.log10(p_idle)])
            rows_y.append([np.log10(lam)])
            split_ids.append(split_id)

    manifest = {
        "format": FORMAT_NAME,
        "version": 1,
        "task": "density",
        "seed": int(seed),
        "counts": counts,
        "kind": kind,
        "mt_range": list(mt_range),
        "p_idle_range_w": list(p_idle_range_w),
        "density_bounds": list(density_bounds),
        "n_densities": n_densities,
        "n_realizations": {k: int(v) for k, v in n_realizations.items()},
        "layout": {"inputs": "log10 terminal density, log10 idle power",
                   "targets": "log10 best density"},
    }
    return _assemble(rows_x, rows_y, split_ids, manifest)


def build_power3_dataset(
    counts,
    seed: int,
    input_dist: str = "uniform",
    model: AnalyticEeModel | None = None,
    p_tx_range_w=(0.1, 10.0),
    p_circ_range_w=(0.5, 1.5),
    p_idle_range_w=(0.1, 0.9),
    density_bounds=(1e-6, 3e-4),
) -> SurrogateDataset:
    """(P_tx, P_circ, P_idle) -> log10 best density, under two input laws.

    'uniform' draws the circuit and idle powers uniformly over their ranges;
    'gaussian' draws them from a truncated normal centered on the range,
    modeling hardware whose nominal figures cluster around the midpoint.
    """
    counts = _norm_counts(counts)
    if input_dist not in ("uniform", "gaussian"):
        raise ValueError("input_dist must be 'uniform' or 'gaussian'")
    model = model if model is not None else AnalyticEeModel()

    def draw(rng, lo, hi):
        if input_dist == "uniform":
            return float(rng.uniform(lo, hi))
        mid, sd = 0.5 * (lo + hi), (hi - lo) / 6.0
        while True:
            v = rng.normal(mid, sd)
            if lo <= v <= hi:
                return float(v)

    rows_x, rows_y, split_ids = [], [], []
    for split_id, name in enumerate(SPLITS):
        for i in range(counts[name]):
            rng = _sample_rng(seed, split_id, i)
            p_tx = _log_uniform(rng, *p_tx_range_w)
            p_circ = draw(rng, *p_circ_range_w)
            p_idle = draw(rng, *p_idle_range_w)
            m = dataclasses.replace(model, p_tx_w=p_tx, p_circ_w=p_circ, p_idle_w=p_idle)
            lam, _ = optimal_density(m, lo=density_bounds[0], hi=density_bounds[1])
            rows_x.append([p_tx, p_circ, p_idle])
            rows_y.append([np.log10(lam)])
            split_ids.append(split_id)

    manifest = {
        "format": FORMAT_NAME,
        "version": 1,
        "task": "power3",
        "seed": int(seed),
        "counts": counts,
        "input_dist": input_dist,
        "p_tx_range_w": list(p_tx_range_w),
        "p_circ_range_w": list(p_circ_range_w),
        "p_idle_range_w": list(p_idle_range_w),
        "density_bounds": list(density_bounds),
        "layout": {"inputs": "P_tx, P_circ, P_idle (W)", "targets": "log10 best density"},
    }
    return _assemble(rows_x, rows_y, split_ids, manifest)
