import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cpext import cpmap as cm
from cpext import dilation as dl
from cpext import sampling
from cpext.errors import NotDominated, ZeroMap

from conftest import matrix_unit

SEEDS = st.integers(0, 2**32 - 1)


def test_minimal_dilation_examples(identity_m2, a11_map, m2):
    dil = dl.minimal_dilation(identity_m2)
    assert dil.mult == (1,) and dil.kdim == 2
    np.testing.assert_allclose(dil.V.conj().T @ dil.V, np.eye(2), atol=1e-14)
    np.testing.assert_allclose(dil.V @ dil.V.conj().T, np.eye(2), atol=1e-14)

    dil = dl.minimal_dilation(a11_map)
    assert dil.mult == (2,) and dil.kdim == 4

    dil = dl.minimal_dilation(cm.zero_map(cm.algebra(2, 1), 2))
    assert dil.mult == (0, 0) and dil.kdim == 0


def test_commutant_basis_sizes(identity_m2, a11_map):
    assert len(dl.commutant_basis(dl.minimal_dilation(identity_m2))) == 1
    assert len(dl.commutant_basis(dl.minimal_dilation(a11_map))) == 4
    two = cm.from_kraus(cm.algebra(2, 1), 1, [[np.array([[1.0], [0.0]])], [np.array([[1.0]])]])
    assert len(dl.commutant_basis(dl.minimal_dilation(two))) == 2


def test_is_pure_examples(a11_map, m2):
    rng = np.random.default_rng(0)
    T = sampling.ginibre(rng, 2, 2)
    assert dl.is_pure(cm.adjoin(cm.identity_map(2), T))
    assert not dl.is_pure(a11_map)
    two = cm.from_kraus(cm.algebra(2, 1), 1, [[np.array([[1.0], [0.0]])], [np.array([[1.0]])]])
    assert not dl.is_pure(two)
    with pytest.raises(ZeroMap):
        dl.is_pure(cm.zero_map(m2, 2))


def test_rn_derivative_scalar_and_identity(a11_map):
    D = dl.rn_derivative(0.3 * a11_map, a11_map)
    for M in D.blocks:
        np.testing.assert_allclose(M, 0.3 * np.eye(M.shape[0]), atol=1e-12)
    D = dl.rn_derivative(a11_map, a11_map)
    np.testing.assert_allclose(D.blocks[0], np.eye(2), atol=1e-12)


def test_rn_derivative_corner_is_projection(m2, diag_map, corner_map):
    dil = dl.minimal_dilation(diag_map)
    D = dl.rn_derivative(corner_map, diag_map, dil=dil)
    M = D.blocks[0]
    np.testing.assert_allclose(M @ M, M, atol=1e-12)
    assert np.trace(M).real == pytest.approx(1.0)
    assert cm.maps_close(dl.dilated_map(dil, D), corner_map)


def test_rn_derivative_rejects_undominated(a11_map):
    with pytest.raises(NotDominated):
        dl.rn_derivative(1.5 * a11_map, a11_map)


def test_dilation_range_examples(identity_m2, m2):
    Q = dl.dilation_range(dl.minimal_dilation(identity_m2), 0)
    assert Q.shape == (2, 2)
    state = cm.from_kraus(m2, 1, [[np.array([[1.0], [0.0]])]])
    Q = dl.dilation_range(dl.minimal_dilation(state), 0)
    assert Q.shape == (2, 1) and abs(abs(Q[0, 0]) - 1) < 1e-14
    incl = np.eye(3)[:, :2]
    corner = cm.from_kraus(cm.algebra(3), 2, [[incl]])
    Q = dl.dilation_range(dl.minimal_dilation(corner), 0)
    np.testing.assert_allclose(Q @ Q.conj().T, incl @ incl.T, atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(seed=SEEDS)
def test_stinespring_identity(seed):
    rng = np.random.default_rng(seed)
    alg = sampling.algebra(rng, 3, 3)
    phi = sampling.kraus_map(rng, alg, int(rng.integers(1, 5)))
    dil = dl.minimal_dilation(phi)
    for i, n in enumerate(alg.blocks):
        for p in range(n):
            for q in range(n):
                a = [np.zeros((m, m)) for m in alg.blocks]
                a[i] = matrix_unit(n, p, q)
                lhs = dil.V.conj().T @ dl.representation(dil, a) @ dil.V
                assert np.linalg.norm(lhs - cm.apply(phi, a)) <= 1e-8 * max(1.0, np.linalg.norm(phi.choi[i]))


@settings(max_examples=40, deadline=None)
@given(seed=SEEDS)
def test_rn_round_trip(seed):
    rng = np.random.default_rng(seed)
    alg = sampling.algebra(rng, 3, 3)
    phi = sampling.kraus_map(rng, alg, int(rng.integers(1, 5)))
    dil = dl.minimal_dilation(phi)
    blocks = []
    for r in dil.mult:
        U = sampling.unitary(rng, r)
        blocks.append((U * rng.uniform(0, 1, r)) @ U.conj().T)
    psi = dl.dilated_map(dil, dl.CommutantElement(tuple(blocks)))
    D = dl.rn_derivative(psi, phi, dil=dil)
    assert cm.maps_close(dl.dilated_map(dil, D), psi)
    for M, M0 in zip(D.blocks, blocks):
        np.testing.assert_allclose(M, M0, atol=1e-6)


@settings(max_examples=40, deadline=None)
@given(seed=SEEDS)
def test_purity_agrees_with_commutant_dimension(seed):
    rng = np.random.default_rng(seed)
    alg = sampling.algebra(rng, 3, 3)
    d = int(rng.integers(1, 5))
    if rng.random() < 0.5:
        kraus = [[] for _ in alg.blocks]
        kraus[0] = [sampling.ginibre(rng, alg.blocks[0], d)]
        phi = cm.from_kraus(alg, d, kraus)
    else:
        phi = sampling.kraus_map(rng, alg, d)
    assert dl.is_pure(phi) == (len(dl.commutant_basis(dl.minimal_dilation(phi))) == 1)
