"""Sparse Tucker decomposition with a CP-factored core, trained by SGD.

The package trains per-mode factor matrices and the core's CP factors from
observed tensor entries only, using linear-cost contraction identities for
the gradients and a conflict-free block schedule for parallel workers.  A
dense brute-force oracle backs the test suite at small scale.
"""

from .coo import (
    CooFormatError,
    DatasetSplit,
    SparseTensorCoo,
    generate_synthetic,
    load_coo,
    split,
    write_coo,
)
from .estimator import TuckerSGD, check_index_array, check_values
from .model import (
    ModelConfig,
    TuckerModel,
    clone_model,
    default_init_scale,
    init_model,
    load_model,
    predict_entries,
    save_model,
)
from .trainer import (
    MetricsRow,
    TrainConfig,
    frobenius_objective,
    learning_rate,
    mae,
    rmse,
    train,
    write_metrics_csv,
)

__all__ = [
    "CooFormatError",
    "DatasetSplit",
    "SparseTensorCoo",
    "generate_synthetic",
    "load_coo",
    "split",
    "write_coo",
    "TuckerSGD",
    "check_index_array",
    "check_values",
    "ModelConfig",
    "TuckerModel",
    "clone_model",
    "default_init_scale",
    "init_model",
    "load_model",
    "predict_entries",
    "save_model",
    "MetricsRow",
    "TrainConfig",
    "frobenius_objective",
    "learning_rate",
    "mae",
    "rmse",
    "train",
    "write_metrics_csv",
]

__version__ = "0.1.0"
