import numpy as np
import pytest


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) \
        / np.sqrt(2)


def random_hermitian(rng, n):
    A = crandn(rng, n, n)
    return (A + A.conj().T) / 2


def random_orthonormal(rng, n, m):
    Q, _ = np.linalg.qr(crandn(rng, n, m))
    return Q


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
