"""Supervised learning of allocation rules from solver-labeled samples."""
from .datasets import (
    SPLITS,
    SurrogateDataset,
    build_assoc_dataset,
    build_density_dataset,
    build_power3_dataset,
    build_power_dataset,
    scenario_from_features,
)
from .surrogate import (
    Standardizer,
    SurrogateModel,
    association_network,
    decode_assignment,
    decode_power,
    density_network,
    evaluate_association,
    evaluate_power_surrogate,
    power3_network,
    power_network,
    train_surrogate,
)
from .transfer import TransferOutcome, TransferPlan, relative_mse, transfer_train

__all__ = [
    "SPLITS",
    "SurrogateDataset",
    "build_assoc_dataset",
    "build_density_dataset",
    "build_power3_dataset",
    "build_power_dataset",
    "scenario_from_features",
    "Standardizer",
    "SurrogateModel",
    "association_network",
    "decode_assignment",
    "decode_power",
    "density_network",
    "evaluate_association",
    "evaluate_power_surrogate",
    "power3_network",
    "power_network",
    "train_surrogate",
    "TransferOutcome",
    "TransferPlan",
    "relative_mse",
    "transfer_train",
]
