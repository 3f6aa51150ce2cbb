import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def random_hermitian(n, rng, complex_=True):
    G = rng.standard_normal((n, n))
    if complex_:
        G = G + 1j * rng.standard_normal((n, n))
    return (G + G.conj().T) / 2


def random_psd(n, rng, rank=None):
    r = n if rank is None else rank
    G = rng.standard_normal((n, r)) + 1j * rng.standard_normal((n, r))
    return G @ G.conj().T / n


def fro(M):
    return float(np.linalg.norm(M, "fro"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
