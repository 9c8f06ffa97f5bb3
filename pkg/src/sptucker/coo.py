"""Sparse COO tensors: loading, writing, synthesis, and train/test splitting.

The on-disk format is FROSTT-style text: one entry per line, N integer
indices followed by one value, whitespace separated.  Lines starting with
``#`` are comments; an optional ``# dims: I1 I2 ... IN`` header overrides
the inferred mode sizes.  Indices are 1-based on disk by default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ModelConfig, TuckerModel, predict_entries


class CooFormatError(ValueError):
    """Raised on malformed COO text input; carries the offending line number."""


@dataclass(frozen=True)
class SparseTensorCoo:
    """An order-N sparse tensor stored as coordinate/value arrays.

    indices has shape (nnz, order) with 0-based components, values has
    shape (nnz,).  Entry order is meaningful (file order / split order) and
    duplicates are permitted: each row is an independent observation.
    """

    dims: tuple[int, ...]
    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if len(self.dims) < 2:
            raise ValueError("tensor order must be >= 2")
        if any(d < 1 for d in self.dims):
            raise ValueError("all mode dimensions must be positive")
        idx = np.ascontiguousarray(np.asarray(self.indices, dtype=np.int64))
        vals = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        if idx.ndim != 2 or idx.shape[1] != len(self.dims):
            raise ValueError(
                f"indices must have shape (nnz, {len(self.dims)}), got {idx.shape}"
            )
        if vals.shape != (idx.shape[0],):
            raise ValueError("values length must match number of index rows")
        if idx.size and (idx.min() < 0 or (idx >= np.asarray(self.dims)).any()):
            raise ValueError("index out of bounds for dims")
        if vals.size and not np.isfinite(vals).all():
            raise ValueError("non-finite value in tensor")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", vals)

    @property
    def order(self) -> int:
        return len(self.dims)

    @property
    def nnz(self) -> int:
        return self.indices.shape[0]

    def entries(self):
        """Iterate (index tuple, value) pairs in stored order."""
        for row, v in zip(self.indices, self.values):
            yield tuple(int(k) for k in row), float(v)

    def same_entries(self, other: "SparseTensorCoo") -> bool:
        return (
            self.dims == other.dims
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True)
class DatasetSplit:
    """Disjoint train/test partition of one tensor's entries (same dims)."""

    train: SparseTensorCoo
    test: SparseTensorCoo

    def __post_init__(self):
        if self.train.dims != self.test.dims:
            raise ValueError("train and test must share dims")


def load_coo(path, index_base: int = 1) -> SparseTensorCoo:
    """Parse a whitespace-separated COO text file.

    Raises CooFormatError on malformed lines, inconsistent token counts,
    indices below index_base, non-finite values, or an empty file.
    """
    if index_base not in (0, 1):
        raise ValueError("index_base must be 0 or 1")
    dims_header = None
    rows = []
    vals = []
    order = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            if stripped.startswith("#"):
                body = stripped[1:].strip()
                if body.lower().startswith("dims:"):
                    try:
                        dims_header = tuple(int(t) for t in body[5:].split())
                    except ValueError:
                        raise CooFormatError(f"line {lineno}: bad dims header") from None
                continue
            tokens = stripped.split()
            if order is None:
                order = len(tokens) - 1
                if order < 2:
                    raise CooFormatError(
                        f"line {lineno}: need at least 2 indices and a value"
                    )
            if len(tokens) != order + 1:
                raise CooFormatError(
                    f"line {lineno}: expected {order + 1} tokens, got {len(tokens)}"
                )
            try:
                idx = [int(t) for t in tokens[:order]]
                val = float(tokens[order])
            except ValueError:
                raise CooFormatError(f"line {lineno}: unparseable token") from None
            if any(k < index_base for k in idx):
                raise CooFormatError(
                    f"line {lineno}: index below base {index_base}"
                )
            if not math.isfinite(val):
                raise CooFormatError(f"line {lineno}: non-finite value")
            rows.append([k - index_base for k in idx])
            vals.append(val)
    if not rows:
        raise CooFormatError("no entries in file")
    indices = np.asarray(rows, dtype=np.int64)
    if dims_header is not None:
        if len(dims_header) != order:
            raise CooFormatError("dims header length does not match entry order")
        dims = dims_header
    else:
        dims = tuple(int(m) + 1 for m in indices.max(axis=0))
    return SparseTensorCoo(dims, indices, np.asarray(vals, dtype=np.float64))


def write_coo(tensor: SparseTensorCoo, path, index_base: int = 1) -> None:
    """Write a tensor in the text format load_coo reads.

    Values are printed with 17 significant digits so a load/write round
    trip is exact.  Refuses to write a tensor with no entries.
    """
    if index_base not in (0, 1):
        raise ValueError("index_base must be 0 or 1")
    if tensor.nnz == 0:
        raise ValueError("refusing to write tensor with no entries")
    with open(path, "w") as fh:
        fh.write("# dims: " + " ".join(str(d) for d in tensor.dims) + "\n")
        for row, v in zip(tensor.indices, tensor.values):
            fh.write(
                " ".join(str(int(k) + index_base) for k in row) + f" {v:.17g}\n"
            )


# Ground-truth construction knobs: weight of the positive bias component per
# mode, and the value standard deviation the drawn model is normalised to.
# One dominant positive component bootstraps learning from the nonnegative
# init; the remaining components are signed and mutually incoherent so they
# stay recoverable; std ~4 keeps the ridge floor small relative to the data.
_BIAS_WEIGHT = 4.0
_TARGET_STD = 4.0


def _draw_ground_truth(dims, j_ranks, r_core: int, seed: int) -> TuckerModel:
    """Random recoverable ground truth: bias component plus incoherent signed ones.

    Factor column 1 is nonnegative (the per-mode bias direction); the other
    columns are zero-centred.  Core column 1 routes only the bias direction
    with weight _BIAS_WEIGHT; the remaining core columns mix only the signed
    factor columns.
    """
    rng = np.random.default_rng([int(seed), 0xC00])
    factors = []
    for d, j in zip(dims, j_ranks):
        h = 1.0 / math.sqrt(j)
        a = rng.uniform(-h / 2, h / 2, size=(d, j))
        a[:, 0] = rng.uniform(0.0, h, size=d)
        factors.append(a)
    core_factors = []
    h_b = 1.0 / math.sqrt(r_core)
    for j in j_ranks:
        b = np.zeros((j, r_core))
        b[0, 0] = _BIAS_WEIGHT * h_b
        if r_core > 1 and j > 1:
            b[1:, 1:] = rng.uniform(-h_b, h_b, size=(j - 1, r_core - 1))
        core_factors.append(b)
    return TuckerModel(dims, j_ranks, r_core, factors, core_factors)


def generate_synthetic(
    dims,
    nnz: int,
    j_ranks,
    r_core: int,
    noise_sigma: float = 0.0,
    seed: int = 0,
) -> tuple[SparseTensorCoo, TuckerModel]:
    """Draw a ground-truth model and sample nnz observations from it.

    Entries sit at distinct uniformly-drawn indices; each value is the model
    prediction at its index plus Normal(0, noise_sigma).  The ground truth is
    rescaled so the noiseless values have standard deviation ~4 over the
    drawn indices.  Deterministic per seed.  Returns (tensor, ground_truth).
    """
    dims = tuple(int(d) for d in dims)
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    total = math.prod(dims)
    if nnz > total:
        raise ValueError(f"nnz={nnz} exceeds dense size {total}")
    if nnz < 1:
        raise ValueError("nnz must be >= 1")
    j_ranks = ModelConfig(j_ranks, r_core, seed=seed).j_ranks
    if len(j_ranks) == 1 and len(dims) > 1:
        j_ranks = j_ranks * len(dims)
    model = _draw_ground_truth(dims, j_ranks, r_core, seed)
    rng = np.random.default_rng([int(seed), 0xC01])
    if total <= max(1 << 24, 16 * nnz):
        linear = rng.choice(total, size=nnz, replace=False)
        indices = np.empty((nnz, len(dims)), dtype=np.int64)
        rem = linear
        for n in range(len(dims) - 1, -1, -1):
            indices[:, n] = rem % dims[n]
            rem = rem // dims[n]
    else:
        # Grid far larger than nnz: rejection-sample distinct tuples.
        seen = set()
        chosen = []
        while len(chosen) < nnz:
            batch = np.stack(
                [rng.integers(0, d, size=nnz) for d in dims], axis=1
            )
            for row in batch:
                key = tuple(int(k) for k in row)
                if key not in seen:
                    seen.add(key)
                    chosen.append(key)
                    if len(chosen) == nnz:
                        break
        indices = np.asarray(chosen, dtype=np.int64)
    raw_std = float(np.std(predict_entries(model, indices)))
    if raw_std > 0:
        k = (_TARGET_STD / raw_std) ** (1.0 / (2 * len(dims)))
        for a in model.factors:
            a *= k
        for b in model.core_factors:
            b *= k
    values = predict_entries(model, indices)
    if noise_sigma > 0:
        values = values + noise_sigma * rng.standard_normal(nnz)
    return SparseTensorCoo(dims, indices, values), model


def split(tensor: SparseTensorCoo, test_fraction: float, seed: int = 0) -> DatasetSplit:
    """Split entries into train/test by seeded sampling without replacement.

    |test| = round(test_fraction * nnz); both halves keep source entry order.
    """
    if not 0 <= test_fraction < 1:
        raise ValueError("test_fraction must be in [0, 1)")
    if tensor.nnz == 0:
        raise ValueError("cannot split an empty tensor")
    n_test = int(round(test_fraction * tensor.nnz))
    if n_test >= tensor.nnz:
        raise ValueError("test_fraction leaves an empty train set")
    rng = np.random.default_rng([int(seed), 0x5311])
    test_ids = np.sort(rng.choice(tensor.nnz, size=n_test, replace=False))
    mask = np.zeros(tensor.nnz, dtype=bool)
    mask[test_ids] = True
    train = SparseTensorCoo(tensor.dims, tensor.indices[~mask], tensor.values[~mask])
    test = SparseTensorCoo(tensor.dims, tensor.indices[mask], tensor.values[mask])
    return DatasetSplit(train, test)
