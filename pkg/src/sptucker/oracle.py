"""Dense brute-force references for every contraction the fast path replaces.

Everything here materialises explicit Kronecker products and dense cores, so
it is capped to small instances (1e6 core entries, 1e7 dense entries) and
exists for verification only.  Conventions:

* Linearisation: flat position of index (i_1, ..., i_N) is
  sum_k i_k * prod_{m<k} I_m, i.e. the mode-1 index varies fastest.
* Mode-n matricisation: rows indexed by i_n, columns by the remaining
  indices linearised with the same smallest-mode-fastest rule.
* Kronecker chains are written highest mode leftmost, so the rightmost
  (lowest-mode) operand varies fastest, matching the linearisation.

Summations run in plain left-to-right order so reference values are
bit-for-bit reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .counting import counter
from .model import TuckerModel

MAX_CORE_ELEMENTS = 10**6
MAX_DENSE_ELEMENTS = 10**7


@dataclass(frozen=True)
class DenseTensor:
    """A small dense tensor as a flat array in smallest-mode-fastest order."""

    dims: tuple[int, ...]
    values: np.ndarray

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        total = math.prod(dims)
        if total > MAX_DENSE_ELEMENTS:
            raise ValueError(f"dense tensor of {total} elements exceeds cap")
        vals = np.asarray(self.values, dtype=np.float64).reshape(total)
        if not np.isfinite(vals).all():
            raise ValueError("non-finite entries in dense tensor")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_ndarray(cls, arr: np.ndarray) -> "DenseTensor":
        return cls(arr.shape, arr.flatten(order="F"))

    def to_ndarray(self) -> np.ndarray:
        return self.values.reshape(self.dims, order="F")

    def at(self, index) -> float:
        pos = 0
        stride = 1
        for k, i in enumerate(index):
            pos += int(i) * stride
            stride *= self.dims[k]
        return float(self.values[pos])


def kron_vec(vectors) -> np.ndarray:
    """Explicit Kronecker product of a sequence of vectors, left to right.

    Callers pass operands highest mode first so the lowest mode varies
    fastest in the result.
    """
    vectors = [np.asarray(v, dtype=np.float64).ravel() for v in vectors]
    total = math.prod(len(v) for v in vectors)
    if total > MAX_DENSE_ELEMENTS:
        raise ValueError(f"kron_vec result of {total} elements exceeds cap")
    out = vectors[0]
    for v in vectors[1:]:
        counter.add(out.size * v.size)
        out = np.kron(out, v)
    return out


def kron_mat(matrices) -> np.ndarray:
    """Explicit Kronecker product of matrices, left to right."""
    matrices = [np.asarray(m, dtype=np.float64) for m in matrices]
    total = math.prod(m.size for m in matrices)
    if total > MAX_DENSE_ELEMENTS:
        raise ValueError(f"kron_mat result of {total} elements exceeds cap")
    out = matrices[0]
    for m in matrices[1:]:
        counter.add(out.size * m.size)
        out = np.kron(out, m)
    return out


def _check_core_size(j_ranks):
    total = math.prod(j_ranks)
    if total > MAX_CORE_ELEMENTS:
        raise ValueError(f"dense core of {total} elements exceeds cap")
    return total


def dense_core_from_kruskal(core_factors) -> DenseTensor:
    """Materialise the rank-R core: entry (j_1..j_N) = sum_r prod_n B(n)[j_n, r]."""
    j_ranks = tuple(b.shape[0] for b in core_factors)
    r_core = core_factors[0].shape[1]
    _check_core_size(j_ranks)
    out = np.zeros(j_ranks)
    for r in range(r_core):
        term = np.asarray(core_factors[0][:, r], dtype=np.float64)
        for b in core_factors[1:]:
            counter.add(term.size * b.shape[0])
            term = np.multiply.outer(term, b[:, r])
        out = out + term
    return DenseTensor.from_ndarray(out)


def matricize(tensor: DenseTensor, mode: int) -> np.ndarray:
    """Mode-n matricisation (I_n rows, smallest-mode-fastest columns)."""
    arr = tensor.to_ndarray()
    moved = np.moveaxis(arr, mode, 0)
    return moved.reshape(arr.shape[mode], -1, order="F")


def vectorize(tensor: DenseTensor, mode: int) -> np.ndarray:
    """Mode-n vectorisation: matricisation columns stacked, mode-n fastest."""
    return matricize(tensor, mode).flatten(order="F")


def dense_core_matricized(core_factors, mode: int) -> np.ndarray:
    """Mode-n matricisation of the CP core built from explicit Kronecker rows.

    Equals B(n) (B(N) kr ... kr B(n+1) kr B(n-1) kr ... kr B(1))^T, assembled
    rank by rank as outer products.
    """
    j_ranks = tuple(b.shape[0] for b in core_factors)
    r_core = core_factors[0].shape[1]
    _check_core_size(j_ranks)
    n_modes = len(core_factors)
    p = math.prod(j for k, j in enumerate(j_ranks) if k != mode)
    out = np.zeros((j_ranks[mode], p))
    for r in range(r_core):
        off = kron_vec(
            [core_factors[k][:, r] for k in range(n_modes - 1, -1, -1) if k != mode]
        )
        counter.add(j_ranks[mode] * p)
        out = out + np.outer(core_factors[mode][:, r], off)
    return out


def s_row(model: TuckerModel, index, mode: int) -> np.ndarray:
    """The sample's row of the factor-side coefficient matrix.

    Kronecker product of the off-mode factor rows, highest mode first.
    """
    rows = [
        model.factors[k][index[k], :]
        for k in range(model.order - 1, -1, -1)
        if k != mode
    ]
    return kron_vec(rows)


def h_row(model: TuckerModel, index, mode: int) -> np.ndarray:
    """The sample's row of the core-side coefficient matrix.

    Off-mode factor rows highest mode first, then the mode-n row rightmost,
    so the mode-n index varies fastest.
    """
    rows = [
        model.factors[k][index[k], :]
        for k in range(model.order - 1, -1, -1)
        if k != mode
    ]
    rows.append(model.factors[mode][index[mode], :])
    return kron_vec(rows)


def dense_reconstruct(factors, dense_core: DenseTensor) -> DenseTensor:
    """Contract the dense core with every factor matrix, mode by mode."""
    arr = dense_core.to_ndarray()
    out_dims = tuple(a.shape[0] for a in factors)
    if math.prod(out_dims) > MAX_DENSE_ELEMENTS:
        raise ValueError("reconstruction exceeds dense size cap")
    for n, a in enumerate(factors):
        counter.add(a.shape[0] * arr.size)
        arr = np.moveaxis(np.tensordot(a, arr, axes=([1], [n])), 0, n)
    return DenseTensor.from_ndarray(arr)


def dense_factor_gradient(model: TuckerModel, entry, mode: int, lambda_a: float) -> np.ndarray:
    """Reference single-sample gradient for one factor row, no fast identities.

    Builds the dense matricised core and the explicit Kronecker coefficient
    row, then evaluates -x*d + lambda*a + (a.d)*d with d the dense
    coefficient column.
    """
    index, x = entry
    d_col = dense_core_matricized(model.core_factors, mode) @ s_row(model, index, mode)
    counter.add(d_col.size * math.prod(
        j for k, j in enumerate(model.j_ranks) if k != mode
    ))
    a = model.factors[mode][index[mode], :]
    inter = float(a @ d_col)
    counter.add(3 * a.size + a.size)
    return -x * d_col + lambda_a * a + inter * d_col


def _dense_q_column(model: TuckerModel, index, mode: int, r: int) -> np.ndarray:
    """Q column for one sample via explicit Kronecker vectors."""
    off_b = kron_vec(
        [model.core_factors[k][:, r] for k in range(model.order - 1, -1, -1) if k != mode]
    )
    srow = s_row(model, index, mode)
    counter.add(off_b.size)
    z = float(off_b @ srow)
    a = model.factors[mode][index[mode], :]
    counter.add(a.size)
    return z * a


def dense_core_gradient(model: TuckerModel, batch, mode: int, r: int, lambda_b: float) -> np.ndarray:
    """Reference batch gradient for one core factor column.

    Mean over the batch of (xhat - x) * Q plus the regularisation term,
    with xhat assembled from the per-rank partial predictions.
    """
    j_n = model.j_ranks[mode]
    acc = np.zeros(j_n)
    count = 0
    for index, x in batch:
        q_r = _dense_q_column(model, index, mode, r)
        xhat = 0.0
        for rc in range(model.r_core):
            q_rc = q_r if rc == r else _dense_q_column(model, index, mode, rc)
            counter.add(j_n)
            xhat += float(model.core_factors[mode][:, rc] @ q_rc)
        counter.add(j_n)
        acc = acc + (xhat - x) * q_r
        count += 1
    if count == 0:
        raise ValueError("empty batch")
    counter.add(2 * j_n)
    return acc / count + lambda_b * model.core_factors[mode][:, r]
