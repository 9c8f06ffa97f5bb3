"""Batch-accumulated SGD updates of the core factor columns.

Core columns are interdependent (every prediction reads all of them), so
per-sample contributions are accumulated against a frozen model and every
column is stepped once from the same pre-update values.  The per-sample
contribution for (mode n, rank r) is (xhat - x) * q, since the data parts
of the gradient combine to exactly prediction-minus-value times the
coefficient vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import Workspace, mode_dots, predict
from .model import TuckerModel


@dataclass
class CoreGradientAccumulator:
    """Per-(mode, rank) running sums of the data-dependent gradient parts.

    grads[n] has shape (J_n, R); column r accumulates the rank-r vector.
    Accumulators merge by elementwise sum with counts adding.
    """

    grads: list[np.ndarray]
    sample_count: int = 0

    @classmethod
    def zeros_like(cls, model: TuckerModel) -> "CoreGradientAccumulator":
        return cls([np.zeros((j, model.r_core)) for j in model.j_ranks])

    def shape_signature(self):
        return tuple(g.shape for g in self.grads)


def core_accumulate(
    model: TuckerModel,
    entry,
    accumulator: CoreGradientAccumulator,
    workspace: Workspace | None = None,
) -> None:
    """Add one sample's contribution for every (mode, rank); model read-only."""
    index, x = entry
    cache = mode_dots(model, index, workspace)
    xhat = predict(cache)
    resid = xhat - x
    c = cache.c
    for n in range(model.order):
        w = np.ones(model.r_core)
        for n0 in range(model.order):
            if n0 != n:
                w = w * c[n0, :]
        a_row = model.factors[n][cache.index[n], :]
        accumulator.grads[n] += resid * np.outer(a_row, w)
    accumulator.sample_count += 1


def core_apply(
    model: TuckerModel,
    accumulator: CoreGradientAccumulator,
    gamma_b: float,
    lambda_b: float,
    average: bool = True,
) -> None:
    """Step every core column once from the same frozen pre-update values.

    b <- b - gamma_b * (acc / count + lambda_b * b); with average=False the
    data part is summed over the batch instead of averaged.
    """
    if accumulator.sample_count < 1:
        raise ValueError("cannot apply an empty accumulator")
    count = accumulator.sample_count if average else 1
    for n in range(model.order):
        b = model.core_factors[n]
        b -= gamma_b * (accumulator.grads[n] / count + lambda_b * b)


def merge_accumulators(
    a: CoreGradientAccumulator, b: CoreGradientAccumulator
) -> CoreGradientAccumulator:
    """Elementwise sum; counts add.  Associative and commutative."""
    if a.shape_signature() != b.shape_signature():
        raise ValueError("accumulator shapes differ")
    return CoreGradientAccumulator(
        [ga + gb for ga, gb in zip(a.grads, b.grads)],
        a.sample_count + b.sample_count,
    )
