import numpy as np
import pytest

from sptucker.model import TuckerModel


@pytest.fixture
def worked_model():
    """Tiny order-3, R=1 model with hand-checkable contractions.

    At index (0,0,0): per-mode dots are 3, 1, 2; prediction is 6.
    """
    factors = [
        np.array([[1.0, 2.0]]),
        np.array([[1.0, 1.0]]),
        np.array([[2.0, 0.0]]),
    ]
    core_factors = [
        np.array([[1.0], [1.0]]),
        np.array([[0.5], [0.5]]),
        np.array([[1.0], [3.0]]),
    ]
    return TuckerModel((1, 1, 1), (2, 2, 2), 1, factors, core_factors)


def random_model(rng, dims=(4, 5, 6), j_ranks=(2, 3, 2), r_core=2, signed=True):
    """Random small model for oracle-equivalence checks."""
    lo = -1.0 if signed else 0.0
    factors = [rng.uniform(lo, 1.0, size=(d, j)) for d, j in zip(dims, j_ranks)]
    core_factors = [rng.uniform(lo, 1.0, size=(j, r_core)) for j in j_ranks]
    return TuckerModel(dims, j_ranks, r_core, factors, core_factors)


def random_index(rng, dims):
    return tuple(int(rng.integers(0, d)) for d in dims)
