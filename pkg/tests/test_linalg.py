import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from cpext import linalg as la
from cpext.errors import BadScalar, KernelMismatch, NonHermitian, OrderViolation, RangeMismatch
from cpext.linalg import DEFAULT_TOL, Tolerances

SEEDS = st.integers(0, 2**32 - 1)


def random_psd(rng, d, rank):
    G = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    return G @ G.conj().T


def test_tolerances_reject_out_of_range():
    with pytest.raises(BadScalar):
        Tolerances(eq_tol=0.0)
    assert Tolerances().spectral == pytest.approx(1e-4)


def test_psd_check_examples():
    assert la.psd_check(np.eye(2)) == (True, pytest.approx(1.0))
    ok, lam = la.psd_check(np.array([[1.0, 2.0], [2.0, 1.0]]))
    # eigenvalues 1 +- 2
    assert not ok and lam == pytest.approx(-1.0)
    ok, lam = la.psd_check(np.ones((2, 2)))
    assert ok and lam == pytest.approx(0.0, abs=1e-12)


def test_psd_check_rejects_non_hermitian():
    with pytest.raises(NonHermitian):
        la.psd_check(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_psd_sqrt_examples():
    np.testing.assert_allclose(la.psd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-14)
    np.testing.assert_allclose(la.psd_sqrt(np.eye(3)), np.eye(3), atol=1e-14)
    M = np.array([[2.0, 1.0], [1.0, 1.0]])
    R = la.psd_sqrt(M)
    np.testing.assert_allclose(R, scipy.linalg.sqrtm(M), atol=1e-12)


def test_psd_sqrt_clamps_tiny_negative_and_rejects_large():
    M = np.diag([1.0, -1e-12])
    np.testing.assert_allclose(la.psd_sqrt(M), np.diag([1.0, 0.0]), atol=1e-14)
    with pytest.raises(Exception):
        la.psd_sqrt(np.diag([1.0, -0.1]))


def test_range_basis_examples():
    Q, r = la.range_basis(np.diag([1.0, 0.0]))
    assert r == 1 and abs(abs(Q[0, 0]) - 1) < 1e-14
    Q, r = la.range_basis(np.zeros((3, 3)))
    assert r == 0 and Q.shape == (3, 0)
    Q, r = la.range_basis(np.ones((2, 2)))
    assert r == 1
    np.testing.assert_allclose(np.abs(Q[:, 0]), [1 / np.sqrt(2)] * 2, atol=1e-14)


def test_pinv_matches_numpy_and_penrose_identities():
    np.testing.assert_allclose(la.pinv(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]))
    np.testing.assert_allclose(la.pinv(np.eye(2)), np.eye(2))
    rng = np.random.default_rng(4)
    v = rng.standard_normal((3, 1)) + 1j * rng.standard_normal((3, 1))
    M = v @ v.conj().T
    X = la.pinv(M)
    np.testing.assert_allclose(X, np.linalg.pinv(M), atol=1e-12)
    np.testing.assert_allclose(M @ X @ M, M, atol=1e-12)
    np.testing.assert_allclose(X @ M @ X, X, atol=1e-12)


def test_invertible_factor_examples():
    np.testing.assert_allclose(la.invertible_factor(np.eye(2), np.eye(2)), np.eye(2))
    C = la.invertible_factor(np.diag([2.0, 0.0]), np.diag([1.0, 0.0]))
    np.testing.assert_allclose(C, np.diag([2.0, 1.0]), atol=1e-14)
    with pytest.raises(RangeMismatch):
        la.invertible_factor(np.diag([1.0, 0.0]), np.eye(2))


def test_invertible_factor_kernel_mismatch():
    A = np.array([[1.0, 1.0], [0.0, 0.0]])
    B = np.diag([1.0, 0.0])
    with pytest.raises(KernelMismatch):
        la.invertible_factor(A, B)


def test_douglas_complete_examples():
    Y = la.douglas_complete(np.eye(2), np.eye(2), 0.5)
    np.testing.assert_allclose(Y.conj().T @ Y, np.eye(2) / 2, atol=1e-14)
    np.testing.assert_allclose(Y, np.eye(2) / np.sqrt(2), atol=1e-14)

    P = np.diag([1.0, 0.0])
    Y = la.douglas_complete(P, P, 0.5)
    np.testing.assert_allclose(Y, np.diag([1 / np.sqrt(2), 1.0]), atol=1e-14)

    P = np.array([[2.0, 1.0], [1.0, 1.0]])
    Y = la.douglas_complete(P, P, 0.25)
    np.testing.assert_allclose(Y, np.sqrt(0.75) * np.eye(2), atol=1e-12)


def test_douglas_complete_errors():
    with pytest.raises(BadScalar):
        la.douglas_complete(np.eye(2), np.eye(2), 1.0)
    with pytest.raises(OrderViolation):
        la.douglas_complete(np.eye(2), 3 * np.eye(2), 0.5)


def test_range_conjugacy_examples():
    rng = np.random.default_rng(0)
    U = scipy.linalg.qr(rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))[0]
    ok, Y = la.range_conjugacy_check(U, np.eye(3))
    assert ok
    np.testing.assert_allclose(Y, U.conj().T, atol=1e-12)

    P = random_psd(rng, 3, 3)
    T = rng.standard_normal((3, 3)) + 3 * np.eye(3)
    assert la.range_conjugacy_check(T, P)[0]

    # ran(T* P^{1/2}) = span{e1} = ran P^{1/2}; P^{1/2} Y = T* P^{1/2} = diag(1, 0) gives Y = I
    ok, Y = la.range_conjugacy_check(np.array([[1.0, 0.0], [1.0, 1.0]]), np.diag([1.0, 0.0]))
    assert ok
    np.testing.assert_allclose(Y, np.eye(2), atol=1e-14)


def test_range_conjugacy_detects_range_change():
    ok, Y = la.range_conjugacy_check(np.array([[1.0, 1.0], [0.0, 1.0]]), np.diag([1.0, 0.0]))
    assert not ok and Y is None


@settings(max_examples=60, deadline=None)
@given(seed=SEEDS, d=st.integers(1, 8), data=st.data())
def test_psd_sqrt_squares_back(seed, d, data):
    rank = data.draw(st.integers(0, d))
    M = random_psd(np.random.default_rng(seed), d, rank)
    R = la.psd_sqrt(M)
    assert la.relative_error(R @ R, M) <= DEFAULT_TOL.eq_tol


@settings(max_examples=60, deadline=None)
@given(seed=SEEDS, d=st.integers(1, 6), t=st.floats(0.05, 0.95))
def test_douglas_complete_identity(seed, d, t):
    rng = np.random.default_rng(seed)
    rank = int(rng.integers(1, d + 1))
    P = random_psd(rng, d, rank)
    # Q = X* P X with X = P^{+1/2} C P^{1/2}, ||C|| <= 1, so 0 <= Q <= P
    C = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    C /= np.linalg.norm(C, 2)
    root = la.psd_sqrt(P)
    Q = la.hermitian_part(root @ C.conj().T @ C @ root)
    Y = la.douglas_complete(P, Q, t)
    residual = la.fro(P - t * Q - Y.conj().T @ P @ Y) / max(1.0, la.fro(P))
    assert residual <= DEFAULT_TOL.eq_tol
    assert la.is_invertible(Y)


@settings(max_examples=60, deadline=None)
@given(seed=SEEDS, d=st.integers(1, 8), data=st.data())
def test_range_rank_invariant_under_invertible_left_factor(seed, d, data):
    rng = np.random.default_rng(seed)
    rank = data.draw(st.integers(0, d))
    M = (rng.standard_normal((d, rank)) @ rng.standard_normal((rank, d)))
    G = rng.standard_normal((d, d)) + 3 * np.eye(d)
    assert la.range_basis(G @ M)[1] == la.range_basis(M)[1] == rank


@settings(max_examples=60, deadline=None)
@given(seed=SEEDS, d=st.integers(1, 6))
def test_invertible_factor_round_trip(seed, d):
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    C = rng.standard_normal((d, d)) + 3 * np.eye(d)
    A = B @ C
    C2 = la.invertible_factor(A, B)
    assert la.fro(A - B @ C2) <= DEFAULT_TOL.eq_tol * max(1.0, la.fro(A))
    assert la.is_invertible(C2)
