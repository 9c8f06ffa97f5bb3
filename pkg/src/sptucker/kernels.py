"""Linear-cost contraction primitives for one observed entry.

The whole fast path rests on one observation: every Kronecker contraction
appearing in the gradients collapses to products of the per-mode scalars
c[n, r] = A(n)[i_n, :] . B(n)[:, r].  Computing the full c table costs
O(R * sum_n J_n) per sample, after which predictions and both gradient
coefficient vectors are cheap combinations of c with single factor rows or
core columns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .counting import counter
from .model import TuckerModel


@dataclass
class ModeDotCache:
    """The c table for one observed index: c[n, r] = A(n)[i_n,:] . B(n)[:,r].

    Valid only against the model state it was computed from; any update to
    a row of A(n) at this index stales row n.
    """

    c: np.ndarray
    index: tuple[int, ...]


class Workspace:
    """Per-worker scratch buffers reused across samples.

    Never aliases model storage; contents are undefined between operations.
    """

    def __init__(self, model: TuckerModel):
        self.cache_buf = np.empty((model.order, model.r_core))
        self.vec_buf = np.empty(max(model.j_ranks))


def mode_dots(model: TuckerModel, index, workspace: Workspace | None = None) -> ModeDotCache:
    """Fill the c table for one index; cost O(R * sum_n J_n)."""
    index = tuple(int(i) for i in index)
    if len(index) != model.order:
        raise ValueError("index length must equal tensor order")
    for n, i in enumerate(index):
        if not 0 <= i < model.dims[n]:
            raise IndexError(f"index {i} out of bounds for mode {n}")
    c = workspace.cache_buf if workspace is not None else np.empty(
        (model.order, model.r_core)
    )
    for n in range(model.order):
        c[n, :] = model.factors[n][index[n], :] @ model.core_factors[n]
        counter.add(model.j_ranks[n] * model.r_core)
    return ModeDotCache(c, index)


def _off_mode_weights(cache: ModeDotCache, mode: int) -> np.ndarray:
    """prod_{n != mode} c[n, r] for every rank r."""
    c = cache.c
    counter.add((c.shape[0] - 2) * c.shape[1] if c.shape[0] > 2 else 0)
    w = np.ones(c.shape[1])
    for n in range(c.shape[0]):
        if n != mode:
            w = w * c[n, :]
    return w


def gs_vector(
    model: TuckerModel,
    cache: ModeDotCache,
    mode: int,
    workspace: Workspace | None = None,
) -> np.ndarray:
    """Factor-update coefficient vector, length J_n.

    Equals the sample's column of the matricised core times the Kronecker
    coefficient row, collapsed to sum_r (prod_{n0 != n} c[n0, r]) * B(n)[:, r].
    With a workspace the result lives in its scratch vector and is only
    valid until the next workspace-backed call.
    """
    if not 0 <= mode < model.order:
        raise IndexError("mode out of range")
    w = _off_mode_weights(cache, mode)
    counter.add(model.j_ranks[mode] * model.r_core)
    if workspace is not None:
        out = workspace.vec_buf[: model.j_ranks[mode]]
        return np.matmul(model.core_factors[mode], w, out=out)
    return model.core_factors[mode] @ w


def q_vector(model: TuckerModel, cache: ModeDotCache, mode: int, r: int) -> np.ndarray:
    """Core-update coefficient vector for (mode, rank r), length J_n.

    (prod_{n0 != mode} c[n0, r]) times the mode's factor row.
    """
    if not 0 <= mode < model.order:
        raise IndexError("mode out of range")
    if not 0 <= r < model.r_core:
        raise IndexError("core rank out of range")
    c = cache.c
    counter.add(max(model.order - 2, 0))
    w = 1.0
    for n in range(model.order):
        if n != mode:
            w *= c[n, r]
    counter.add(model.j_ranks[mode])
    return w * model.factors[mode][cache.index[mode], :]


def predict(cache: ModeDotCache) -> float:
    """Model value at the cache's index: sum_r prod_n c[n, r]."""
    c = cache.c
    counter.add((c.shape[0] - 1) * c.shape[1])
    return float(np.prod(c, axis=0).sum())


def intermx(model: TuckerModel, cache: ModeDotCache, mode: int, r: int) -> float:
    """Partial prediction of rank r seen from one mode; sums to predict()."""
    q = q_vector(model, cache, mode, r)
    counter.add(model.j_ranks[mode])
    return float(model.core_factors[mode][:, r] @ q)
