import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_table(rng, n_rows, n_cols, total=500):
    """Random nonnegative integer table with every margin positive."""
    while True:
        probs = rng.dirichlet(np.ones(n_rows * n_cols) * 0.8)
        counts = rng.multinomial(total, probs).reshape(n_rows, n_cols)
        if counts.sum(axis=1).min() > 0 and counts.sum(axis=0).min() > 0:
            return counts.astype(float)
