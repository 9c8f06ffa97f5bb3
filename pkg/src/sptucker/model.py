"""Trainable state: per-mode factor matrices and the CP-factored core.

A model holds N factor matrices A(n) of shape (I_n, J_n) plus N core factor
matrices B(n) of shape (J_n, R); the dense core they imply is the rank-R sum
of outer products of the B columns and is never materialised during training.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ModelConfig:
    """Rank and initialisation hyperparameters."""

    j_ranks: tuple[int, ...]
    r_core: int
    init_scale_factor: float = 1.0
    seed: int = 0

    def __post_init__(self):
        ranks = self.j_ranks
        if isinstance(ranks, int):
            ranks = (ranks,)
        object.__setattr__(self, "j_ranks", tuple(int(j) for j in ranks))
        if any(j < 1 for j in self.j_ranks):
            raise ValueError("all j_ranks must be >= 1")
        if self.r_core < 1:
            raise ValueError("r_core must be >= 1")
        if self.init_scale_factor < 0:
            raise ValueError("init_scale_factor must be >= 0")


@dataclass
class TuckerModel:
    """Factor matrices and core factors; mutable training state.

    Concurrent mutation is only safe under the partition scheduler's
    guarantee that no two workers touch the same factor row in a round;
    core factors are read-frozen during accumulation and applied by a
    single owner.
    """

    dims: tuple[int, ...]
    j_ranks: tuple[int, ...]
    r_core: int
    factors: list[np.ndarray] = field(repr=False)
    core_factors: list[np.ndarray] = field(repr=False)

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        self.j_ranks = tuple(int(j) for j in self.j_ranks)
        if len(self.j_ranks) != len(self.dims):
            raise ValueError("j_ranks length must match order")
        for n, (i_n, j_n) in enumerate(zip(self.dims, self.j_ranks)):
            if self.factors[n].shape != (i_n, j_n):
                raise ValueError(f"factor {n} must have shape {(i_n, j_n)}")
            if self.core_factors[n].shape != (j_n, self.r_core):
                raise ValueError(
                    f"core factor {n} must have shape {(j_n, self.r_core)}"
                )
            if not np.isfinite(self.factors[n]).all():
                raise ValueError(f"factor {n} has non-finite entries")
            if not np.isfinite(self.core_factors[n]).all():
                raise ValueError(f"core factor {n} has non-finite entries")

    @property
    def order(self) -> int:
        return len(self.dims)


def init_model(dims, config: ModelConfig) -> TuckerModel:
    """Draw a fresh model, deterministic per config.seed.

    Factor entries are i.i.d. Uniform(0, s/sqrt(J_n)) and core factor
    entries Uniform(0, s/sqrt(R)) with s = config.init_scale_factor, so
    initial predictions stay bounded as ranks grow.
    """
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims):
        raise ValueError("all dims must be positive")
    j_ranks = config.j_ranks
    if len(j_ranks) == 1 and len(dims) > 1:
        j_ranks = j_ranks * len(dims)
    if len(j_ranks) != len(dims):
        raise ValueError("j_ranks length must match order")
    if config.r_core > min(j_ranks):
        warnings.warn(
            f"r_core={config.r_core} exceeds min(j_ranks)={min(j_ranks)}; "
            "the core factorisation is rank-deficient in at least one mode",
            stacklevel=2,
        )
    rng = np.random.default_rng(config.seed)
    s = config.init_scale_factor
    factors = [
        rng.uniform(0.0, s / np.sqrt(j), size=(d, j)) if s > 0 else np.zeros((d, j))
        for d, j in zip(dims, j_ranks)
    ]
    core_factors = [
        rng.uniform(0.0, s / np.sqrt(config.r_core), size=(j, config.r_core))
        if s > 0
        else np.zeros((j, config.r_core))
        for j in j_ranks
    ]
    return TuckerModel(dims, j_ranks, config.r_core, factors, core_factors)


def clone_model(model: TuckerModel) -> TuckerModel:
    """Deep, independent copy; mutating the copy never touches the original."""
    return TuckerModel(
        model.dims,
        model.j_ranks,
        model.r_core,
        [a.copy() for a in model.factors],
        [b.copy() for b in model.core_factors],
    )


def default_init_scale(values, order: int) -> float:
    """Default init_scale_factor: (mean training value)^(1/N), clamped to [0.1, 1].

    Keeps initial residuals bounded without hand tuning per dataset.
    """
    mean = float(np.mean(np.abs(values)))
    if mean <= 0:
        return 0.1
    return float(min(1.0, max(0.1, mean ** (1.0 / order))))


def predict_entries(model: TuckerModel, indices: np.ndarray) -> np.ndarray:
    """Model predictions at an (nnz, N) array of index tuples.

    Evaluates sum_r prod_n (A(n)[i_n, :] . B(n)[:, r]) for every row at
    once; read-only on the model.
    """
    indices = np.asarray(indices, dtype=np.int64)
    if indices.ndim == 1:
        indices = indices[None, :]
    prod = np.ones((indices.shape[0], model.r_core))
    for n in range(model.order):
        prod *= model.factors[n][indices[:, n], :] @ model.core_factors[n]
    return prod.sum(axis=1)


def save_model(model: TuckerModel, path) -> None:
    """Write a plain-text checkpoint (17 significant digits, exact round trip)."""
    with open(path, "w") as fh:
        fh.write(f"order {model.order}\n")
        fh.write("dims " + " ".join(str(d) for d in model.dims) + "\n")
        fh.write("j_ranks " + " ".join(str(j) for j in model.j_ranks) + "\n")
        fh.write(f"r_core {model.r_core}\n")
        for n, a in enumerate(model.factors):
            fh.write(f"factor {n}\n")
            for row in a:
                fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")
        for n, b in enumerate(model.core_factors):
            fh.write(f"core_factor {n}\n")
            for row in b:
                fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def load_model(path) -> TuckerModel:
    """Read a checkpoint written by save_model."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    pos = 0

    def take(keyword):
        nonlocal pos
        tokens = lines[pos].split()
        if tokens[0] != keyword:
            raise ValueError(f"expected '{keyword}' in checkpoint, got '{tokens[0]}'")
        pos += 1
        return tokens[1:]

    order = int(take("order")[0])
    dims = tuple(int(t) for t in take("dims"))
    j_ranks = tuple(int(t) for t in take("j_ranks"))
    r_core = int(take("r_core")[0])
    if len(dims) != order or len(j_ranks) != order:
        raise ValueError("checkpoint header is inconsistent")

    def read_matrix(rows, cols):
        nonlocal pos
        out = np.empty((rows, cols))
        for i in range(rows):
            vals = lines[pos].split()
            if len(vals) != cols:
                raise ValueError(f"checkpoint row has {len(vals)} values, expected {cols}")
            out[i] = [float(v) for v in vals]
            pos += 1
        return out

    factors = []
    for n in range(order):
        take("factor")
        factors.append(read_matrix(dims[n], j_ranks[n]))
    core_factors = []
    for n in range(order):
        take("core_factor")
        core_factors.append(read_matrix(j_ranks[n], r_core))
    return TuckerModel(dims, j_ranks, r_core, factors, core_factors)
