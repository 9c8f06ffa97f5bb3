"""Per-sample SGD updates of factor rows.

For one observed entry (index, x) and one mode n the gradient of the
pointwise squared loss plus ridge penalty with respect to the factor row is

    g = -x * gs + lambda_a * a + (a . gs) * gs

where gs is the fast coefficient vector for the sample and a the current
factor row; a . gs is also the model's prediction at the index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .counting import counter
from .kernels import Workspace, gs_vector, mode_dots
from .model import TuckerModel


@dataclass
class FactorGradient:
    """Gradient for one factor row: mode n, row i_n, vector g of length J_n."""

    mode: int
    row: int
    g: np.ndarray


def factor_gradient(
    model: TuckerModel,
    entry,
    mode: int,
    lambda_a: float,
    workspace: Workspace | None = None,
) -> FactorGradient:
    """Single-sample gradient of the regularised loss for one factor row."""
    index, x = entry
    cache = mode_dots(model, index, workspace)
    gs = gs_vector(model, cache, mode, workspace)
    a = model.factors[mode][cache.index[mode], :]
    inter = float(a @ gs)
    counter.add(4 * a.size)
    g = -x * gs + lambda_a * a + inter * gs
    return FactorGradient(mode, cache.index[mode], g)


def sgd_step(w: np.ndarray, g: np.ndarray, gamma: float) -> np.ndarray:
    """One descent step: returns w - gamma * g (new array)."""
    if w.shape != g.shape:
        raise ValueError("parameter and gradient shapes differ")
    counter.add(g.size)
    return w - gamma * g


def factor_epoch_shard(
    model: TuckerModel,
    entries,
    gammas,
    lambdas,
    workspace: Workspace | None = None,
) -> None:
    """Sequential pass over a shard of samples, updating rows in place.

    For each sample the modes are visited in ascending order; the c table is
    recomputed per mode because the previous mode's row update stales it.
    Caller (the scheduler) must guarantee this worker exclusively owns every
    row the shard touches.
    """
    gammas = np.broadcast_to(np.asarray(gammas, dtype=np.float64), (model.order,))
    lambdas = np.broadcast_to(np.asarray(lambdas, dtype=np.float64), (model.order,))
    if workspace is None:
        workspace = Workspace(model)
    for index, x in entries:
        for n in range(model.order):
            fg = factor_gradient(model, (index, x), n, lambdas[n], workspace)
            model.factors[n][fg.row, :] = sgd_step(
                model.factors[n][fg.row, :], fg.g, gammas[n]
            )
