"""Alternating-epoch training loop with conflict-free parallel workers.

Each epoch runs a factor phase (one full pass over the shuffled training
entries, executed as partition rounds with one worker per block) and, when
enabled, a core phase (parallel gradient accumulation over a sampled batch
against the frozen model, one merge, one simultaneous apply).  The learning
rate decays as alpha / (1 + beta * t^1.5) with t the epoch number.
"""

from __future__ import annotations

import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _loops
from .coo import DatasetSplit, SparseTensorCoo
from .model import TuckerModel, predict_entries
from .partition import build_partition, round_schedule
from . import oracle

METRICS_HEADER = "epoch,wall_seconds,train_rmse,train_mae,test_rmse,test_mae,gamma_a,gamma_b"


@dataclass(frozen=True)
class TrainConfig:
    """Epoch-loop settings: schedule parameters, regularisation, parallelism.

    Defaults follow the reference hyperparameters for rank-4 rating tensors:
    alpha_a=0.009, beta_a=0.05, lambda_a=0.01 for the factor phase and
    alpha_b=0.0045, beta_b=0.1, lambda_b=0.01 for the core phase.
    """

    epochs: int
    workers: int = 1
    update_core: bool = True
    alpha_a: float = 0.009
    beta_a: float = 0.05
    lambda_a: float = 0.01
    alpha_b: float = 0.0045
    beta_b: float = 0.1
    lambda_b: float = 0.01
    core_batch_cap: int = 1 << 20
    seed: int = 0
    eval_every: int = 1
    core_average: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        for name in ("alpha_a", "beta_a", "lambda_a", "alpha_b", "beta_b", "lambda_b"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.core_batch_cap < 1:
            raise ValueError("core_batch_cap must be >= 1")
        if self.eval_every < 1:
            raise ValueError("eval_every must be >= 1")


@dataclass(frozen=True)
class MetricsRow:
    """One evaluation snapshot; test metrics are NaN when no test set exists."""

    epoch: int
    wall_seconds: float
    train_rmse: float
    train_mae: float
    test_rmse: float
    test_mae: float
    gamma_a: float
    gamma_b: float


def learning_rate(alpha: float, beta: float, t: int) -> float:
    """Decayed step size alpha / (1 + beta * t^1.5); equals alpha at t=0."""
    if alpha < 0 or beta < 0:
        raise ValueError("alpha and beta must be >= 0")
    if t < 0:
        raise ValueError("t must be >= 0")
    return alpha / (1.0 + beta * float(t) ** 1.5)


def rmse(model: TuckerModel, dataset: SparseTensorCoo) -> float:
    """Root-mean-square error of the model over a dataset's entries."""
    if dataset.nnz == 0:
        raise ValueError("dataset is empty")
    resid = dataset.values - predict_entries(model, dataset.indices)
    return float(np.sqrt(np.mean(resid**2)))


def mae(model: TuckerModel, dataset: SparseTensorCoo) -> float:
    """Mean absolute error of the model over a dataset's entries."""
    if dataset.nnz == 0:
        raise ValueError("dataset is empty")
    resid = dataset.values - predict_entries(model, dataset.indices)
    return float(np.mean(np.abs(resid)))


def frobenius_objective(
    model: TuckerModel,
    dataset: SparseTensorCoo,
    lambda_core: float = 0.0,
    lambda_factors: float = 0.0,
) -> float:
    """Observed squared loss plus ridge penalties.

    The core penalty needs the dense core, so it is only computed when
    prod(J_n) <= 1e6; beyond that it is omitted with a warning.
    """
    if dataset.nnz == 0:
        raise ValueError("dataset is empty")
    resid = dataset.values - predict_entries(model, dataset.indices)
    total = float(resid @ resid)
    if lambda_core != 0.0:
        if math.prod(model.j_ranks) <= oracle.MAX_CORE_ELEMENTS:
            g = oracle.dense_core_from_kruskal(model.core_factors)
            total += lambda_core * float(g.values @ g.values)
        else:
            warnings.warn(
                "core penalty not computed: dense core exceeds size cap",
                stacklevel=2,
            )
    if lambda_factors != 0.0:
        for a in model.factors:
            total += lambda_factors * float(np.sum(a * a))
    return total


def _pack(mats):
    offsets = np.zeros(len(mats) + 1, dtype=np.int64)
    for n, m in enumerate(mats):
        offsets[n + 1] = offsets[n] + m.size
    flat = np.empty(offsets[-1])
    for n, m in enumerate(mats):
        flat[offsets[n] : offsets[n + 1]] = m.ravel()
    return flat, offsets


def _unpack_into(mats, flat, offsets):
    for n, m in enumerate(mats):
        np.copyto(m, flat[offsets[n] : offsets[n + 1]].reshape(m.shape))


def train(model: TuckerModel, split: DatasetSplit, config: TrainConfig) -> list[MetricsRow]:
    """Run the alternating epochs in place on the model; returns metric rows.

    The factor phase walks every training entry exactly once per epoch in
    partition-round order; rows are only ever updated by their owning
    worker.  The core phase, when enabled, accumulates gradients over a
    seeded batch (capped at core_batch_cap) against the frozen model and
    applies one simultaneous step per epoch.
    """
    train_set = split.train
    if train_set.dims != model.dims:
        raise ValueError("model dims do not match dataset dims")
    if train_set.nnz == 0:
        raise ValueError("training set is empty")
    w = config.workers
    if w > min(model.dims):
        raise ValueError(f"workers={w} cannot partition dims {model.dims}")

    plan = build_partition(train_set, w)
    schedule = round_schedule(model.order, w)
    fac, foff = _pack(model.factors)
    cor, coff = _pack(model.core_factors)
    jr = np.asarray(model.j_ranks, dtype=np.int64)
    idx = train_set.indices
    vals = train_set.values
    rcore = model.r_core
    has_test = split.test.nnz > 0

    executor = ThreadPoolExecutor(max_workers=w) if w > 1 else None
    rows: list[MetricsRow] = []
    wall = 0.0
    try:
        for t in range(config.epochs):
            gamma_a = learning_rate(config.alpha_a, config.beta_a, t)
            gamma_b = learning_rate(config.alpha_b, config.beta_b, t)
            gammas = np.full(model.order, gamma_a)
            lambdas = np.full(model.order, config.lambda_a)
            start = time.perf_counter()

            processed = 0
            for rnd in schedule.rounds:
                futures = []
                for block in rnd:
                    ids = plan.block_entries.get(block)
                    if ids is None or len(ids) == 0:
                        continue
                    rng = np.random.default_rng(
                        [config.seed, 1, t, *block]
                    )
                    visit = np.ascontiguousarray(ids[rng.permutation(len(ids))])
                    processed += len(visit)
                    args = (idx, vals, visit, fac, foff, cor, coff, jr, rcore,
                            gammas, lambdas)
                    if executor is None:
                        _loops.factor_pass(*args)
                    else:
                        futures.append(executor.submit(_loops.factor_pass, *args))
                for f in futures:
                    f.result()
            if processed != train_set.nnz:
                raise RuntimeError("partition did not cover every training entry")

            if config.update_core:
                k = min(train_set.nnz, config.core_batch_cap)
                rng = np.random.default_rng([config.seed, 2, t])
                if k == train_set.nnz:
                    psi = np.arange(k, dtype=np.int64)
                else:
                    psi = rng.choice(train_set.nnz, size=k, replace=False).astype(
                        np.int64
                    )
                chunks = [c for c in np.array_split(psi, w) if len(c)]
                accs = [np.zeros(coff[-1]) for _ in chunks]
                if executor is None:
                    for chunk, acc in zip(chunks, accs):
                        _loops.core_pass(idx, vals, np.ascontiguousarray(chunk),
                                         fac, foff, cor, coff, jr, rcore, acc, coff)
                else:
                    futures = [
                        executor.submit(
                            _loops.core_pass, idx, vals,
                            np.ascontiguousarray(chunk), fac, foff, cor, coff,
                            jr, rcore, acc, coff,
                        )
                        for chunk, acc in zip(chunks, accs)
                    ]
                    for f in futures:
                        f.result()
                total_acc = accs[0]
                for acc in accs[1:]:
                    total_acc = total_acc + acc
                denom = k if config.core_average else 1
                for n in range(model.order):
                    view = cor[coff[n] : coff[n + 1]].reshape(jr[n], rcore)
                    view -= gamma_b * (
                        total_acc[coff[n] : coff[n + 1]].reshape(jr[n], rcore) / denom
                        + config.lambda_b * view
                    )

            wall += time.perf_counter() - start

            if (t + 1) % config.eval_every == 0 or t == config.epochs - 1:
                _unpack_into(model.factors, fac, foff)
                _unpack_into(model.core_factors, cor, coff)
                rows.append(
                    MetricsRow(
                        epoch=t + 1,
                        wall_seconds=wall,
                        train_rmse=rmse(model, train_set),
                        train_mae=mae(model, train_set),
                        test_rmse=rmse(model, split.test) if has_test else float("nan"),
                        test_mae=mae(model, split.test) if has_test else float("nan"),
                        gamma_a=gamma_a,
                        gamma_b=gamma_b,
                    )
                )
    finally:
        if executor is not None:
            executor.shutdown(wait=True)
    _unpack_into(model.factors, fac, foff)
    _unpack_into(model.core_factors, cor, coff)
    return rows


def write_metrics_csv(rows, path) -> None:
    """Write metric rows in the fixed CSV column order."""
    with open(path, "w") as fh:
        fh.write(METRICS_HEADER + "\n")
        for r in rows:
            fh.write(
                f"{r.epoch},{r.wall_seconds!r},{r.train_rmse!r},{r.train_mae!r},"
                f"{r.test_rmse!r},{r.test_mae!r},{r.gamma_a!r},{r.gamma_b!r}\n"
            )
