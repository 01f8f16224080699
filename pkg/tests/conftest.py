import numpy as np
import pytest

from cpext import cpmap as cm


def unit_vector(n, i):
    e = np.zeros((n, 1), dtype=complex)
    e[i, 0] = 1.0
    return e


def matrix_unit(n, p, q):
    E = np.zeros((n, n), dtype=complex)
    E[p, q] = 1.0
    return E


@pytest.fixture
def m2():
    return cm.algebra(2)


@pytest.fixture
def identity_m2():
    return cm.identity_map(2)


@pytest.fixture
def a11_map(m2):
    """a -> a_11 I_2, Kraus operators e1 e1^T and e1 e2^T."""
    return cm.from_kraus(m2, 2, [[matrix_unit(2, 0, 0), matrix_unit(2, 0, 1)]])


@pytest.fixture
def diag_map(m2):
    """a -> diag(a_11, a_22)."""
    return cm.from_kraus(m2, 2, [[matrix_unit(2, 0, 0), matrix_unit(2, 1, 1)]])


@pytest.fixture
def corner_map(m2):
    """a -> [[a_11, 0], [0, 0]]."""
    return cm.from_kraus(m2, 2, [[matrix_unit(2, 0, 0)]])


def state_times(m2_alg, P, weights=(1.0, 0.0)):
    """a -> (w_1 a_11 + w_2 a_22) P."""
    P = np.asarray(P, dtype=complex)
    d = P.shape[0]
    w, U = np.linalg.eigh(P)
    root = (U * np.sqrt(np.clip(w, 0, None))) @ U.conj().T
    ops = []
    for i, wt in enumerate(weights):
        if wt == 0:
            continue
        for k in range(d):
            K = np.zeros((2, d), dtype=complex)
            K[i, :] = np.sqrt(wt) * root[k, :]
            ops.append(K)
    return cm.from_kraus(m2_alg, d, [ops])
