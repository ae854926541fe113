import numpy as np
import pytest

from esdsim.linalg import SignedAxis, axis_state, basis_state


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def rand_state(rng, d):
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def rand_hermitian(rng, d):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (a + a.conj().T) / 2


def rand_density(rng, d):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


KET0 = basis_state("0")
KET1 = basis_state("1")
PLUS = axis_state(SignedAxis("x", 1))
MINUS = axis_state(SignedAxis("x", -1))
BELL = np.array([1, 0, 0, 1]) / np.sqrt(2)
PSI_MINUS_PAIR = np.array([0, 1, 1, 0]) / np.sqrt(2)
