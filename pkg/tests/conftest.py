import numpy as np
import pytest

from imcc import Dataset
from imcc._accel import warmup


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # JIT compilation must not land inside timed test sections.
    warmup()


def random_dataset(rng, n, d, q):
    """Dense random features with random +-1 labels (at least one +1 and one
    -1 per row so every metric is defined)."""
    X = rng.normal(size=(n, d))
    Y = rng.choice((-1, 1), size=(n, q))
    for i in range(n):
        if np.all(Y[i] == Y[i, 0]):
            j = rng.integers(q)
            Y[i, j] = -Y[i, j]
    return Dataset(
        X, Y, tuple(f"f{j}" for j in range(d)), tuple(f"l{j}" for j in range(q))
    )


@pytest.fixture
def make_dataset():
    return random_dataset
