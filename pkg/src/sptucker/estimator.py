"""Sklearn-style estimator facade over the SGD training loop.

``TuckerSGD`` follows the fit/predict + get_params/set_params protocol so it
drops into pipelines, grid search, and cross-validation tooling: X is an
(n_samples, n_modes) integer array of tensor indices and y the observed
values.
"""

from __future__ import annotations

import numpy as np

from .coo import DatasetSplit, SparseTensorCoo
from .model import ModelConfig, default_init_scale, init_model, predict_entries
from .trainer import TrainConfig, train


def check_index_array(X, dims=None) -> np.ndarray:
    """Validate an (n_samples, n_modes) integer index array.

    Returns a contiguous int64 copy; raises ValueError on wrong shape,
    non-integral data, negatives, or out-of-range components when dims is
    given.
    """
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[1] < 2:
        raise ValueError(
            f"X must be 2-D with at least 2 index columns, got shape {X.shape}"
        )
    if not np.issubdtype(X.dtype, np.integer):
        rounded = np.rint(X)
        if not np.array_equal(rounded, X):
            raise ValueError("X must contain integer tensor indices")
        X = rounded
    X = np.ascontiguousarray(X, dtype=np.int64)
    if X.size and X.min() < 0:
        raise ValueError("tensor indices must be non-negative")
    if dims is not None:
        if X.shape[1] != len(dims):
            raise ValueError(
                f"X has {X.shape[1]} index columns but dims has {len(dims)} modes"
            )
        if X.size and (X >= np.asarray(dims, dtype=np.int64)).any():
            raise ValueError("tensor index out of range for dims")
    return X


def check_values(y, n_samples: int) -> np.ndarray:
    """Validate a finite 1-D value vector of the given length."""
    y = np.ascontiguousarray(np.asarray(y, dtype=np.float64)).ravel()
    if y.shape[0] != n_samples:
        raise ValueError(f"y has {y.shape[0]} values for {n_samples} samples")
    if y.size and not np.isfinite(y).all():
        raise ValueError("y contains non-finite values")
    return y


class TuckerSGD:
    """Sparse Tucker decomposition with a CP-factored core, fit by SGD.

    Parameters mirror the training configuration; ``dims`` may be left None
    to infer mode sizes from the fitted indices.  After ``fit``, the learned
    state is exposed as ``factors_`` and ``core_factors_`` and the per-epoch
    metrics as ``history_``.
    """

    def __init__(
        self,
        j_ranks=4,
        r_core: int = 4,
        dims=None,
        epochs: int = 20,
        workers: int = 1,
        update_core: bool = True,
        alpha_a: float = 0.009,
        beta_a: float = 0.05,
        lambda_a: float = 0.01,
        alpha_b: float = 0.0045,
        beta_b: float = 0.1,
        lambda_b: float = 0.01,
        core_batch_cap: int = 1 << 20,
        eval_every: int = 1,
        init_scale_factor=None,
        seed: int = 0,
    ):
        self.j_ranks = j_ranks
        self.r_core = r_core
        self.dims = dims
        self.epochs = epochs
        self.workers = workers
        self.update_core = update_core
        self.alpha_a = alpha_a
        self.beta_a = beta_a
        self.lambda_a = lambda_a
        self.alpha_b = alpha_b
        self.beta_b = beta_b
        self.lambda_b = lambda_b
        self.core_batch_cap = core_batch_cap
        self.eval_every = eval_every
        self.init_scale_factor = init_scale_factor
        self.seed = seed

    _param_names = (
        "j_ranks", "r_core", "dims", "epochs", "workers", "update_core",
        "alpha_a", "beta_a", "lambda_a", "alpha_b", "beta_b", "lambda_b",
        "core_batch_cap", "eval_every", "init_scale_factor", "seed",
    )

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._param_names}

    def set_params(self, **params) -> "TuckerSGD":
        for name, value in params.items():
            if name not in self._param_names:
                raise ValueError(f"unknown parameter {name!r} for TuckerSGD")
            setattr(self, name, value)
        return self

    def fit(self, X, y) -> "TuckerSGD":
        """Fit the factor matrices and core factors to observed entries."""
        X = check_index_array(X, self.dims)
        y = check_values(y, X.shape[0])
        if X.shape[0] == 0:
            raise ValueError("cannot fit on zero samples")
        dims = (
            tuple(int(d) for d in self.dims)
            if self.dims is not None
            else tuple(int(m) + 1 for m in X.max(axis=0))
        )
        tensor = SparseTensorCoo(dims, X, y)
        scale = (
            self.init_scale_factor
            if self.init_scale_factor is not None
            else default_init_scale(y, len(dims))
        )
        j_ranks = self.j_ranks
        if np.isscalar(j_ranks):
            j_ranks = (int(j_ranks),) * len(dims)
        model = init_model(
            dims,
            ModelConfig(tuple(j_ranks), self.r_core, scale, self.seed),
        )
        empty_test = SparseTensorCoo(dims, np.empty((0, len(dims)), dtype=np.int64),
                                     np.empty(0))
        config = TrainConfig(
            epochs=self.epochs,
            workers=self.workers,
            update_core=self.update_core,
            alpha_a=self.alpha_a,
            beta_a=self.beta_a,
            lambda_a=self.lambda_a,
            alpha_b=self.alpha_b,
            beta_b=self.beta_b,
            lambda_b=self.lambda_b,
            core_batch_cap=self.core_batch_cap,
            seed=self.seed,
            eval_every=self.eval_every,
        )
        self.history_ = train(model, DatasetSplit(tensor, empty_test), config)
        self.model_ = model
        self.dims_ = dims
        self.factors_ = model.factors
        self.core_factors_ = model.core_factors
        return self

    def predict(self, X) -> np.ndarray:
        """Predicted values at the given index tuples."""
        if not hasattr(self, "model_"):
            raise RuntimeError("estimator is not fitted; call fit first")
        X = check_index_array(X, self.dims_)
        return predict_entries(self.model_, X)

    def score(self, X, y) -> float:
        """Coefficient of determination of the predictions at (X, y)."""
        X = check_index_array(X, self.dims_ if hasattr(self, "dims_") else None)
        y = check_values(y, X.shape[0])
        pred = self.predict(X)
        ss_res = float(np.sum((y - pred) ** 2))
        ss_tot = float(np.sum((y - np.mean(y)) ** 2))
        if ss_tot == 0:
            return 0.0 if ss_res > 0 else 1.0
        return 1.0 - ss_res / ss_tot
