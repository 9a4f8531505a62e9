import numpy as np
import pytest

from lsqsolve.rng import stream


def random_matrix(seed, m, n, complex_entries=False, tag="test-matrix"):
    gen = stream(seed, tag)
    a = gen.standard_normal((m, n))
    if complex_entries:
        a = a + 1j * gen.standard_normal((m, n))
    return a


def random_rank_k(seed, m, n, sigmas, complex_entries=False):
    """Exact rank-k matrix with prescribed singular values."""
    gen = stream(seed, "rank-k")
    k = len(sigmas)
    gu = gen.standard_normal((m, k))
    gv = gen.standard_normal((n, k))
    if complex_entries:
        gu = gu + 1j * gen.standard_normal((m, k))
        gv = gv + 1j * gen.standard_normal((n, k))
    u, _ = np.linalg.qr(gu)
    v, _ = np.linalg.qr(gv)
    return (u * np.asarray(sigmas)) @ v.conj().T


@pytest.fixture
def rng():
    return stream(0, "fixture")
