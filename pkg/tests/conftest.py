import numpy as np
import pytest

import bracketsim as bs

A, B, K = 2.0, -3.0, 0.5


@pytest.fixture(scope="session")
def example():
    return bs.example_system(A, B, K)


@pytest.fixture(scope="session")
def table():
    return bs.lipschitz_table(A, B, K)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)


def constant_field(values):
    values = np.atleast_1d(np.asarray(values, dtype=float))

    def value(t, x):
        return values.copy()

    return bs.VectorField(dim=len(values), value=value, label="const")


def poly_field(coeffs):
    """Smooth 1-d polynomial field sum_k c_k x^k for property probes."""
    coeffs = list(coeffs)

    def value(t, x):
        acc = 0.0
        for c in reversed(coeffs):
            acc = acc * x[0] + c
        return np.array([acc])

    return bs.VectorField(dim=1, value=value, label="poly")
