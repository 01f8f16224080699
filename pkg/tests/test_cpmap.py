import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cpext import cpmap as cm
from cpext import linalg as la
from cpext import sampling
from cpext.errors import AlgebraMismatch, DimMismatch, NotCP

from conftest import matrix_unit, state_times

SEEDS = st.integers(0, 2**32 - 1)


def random_map(seed, max_block=3, max_hdim=4):
    rng = np.random.default_rng(seed)
    alg = sampling.algebra(rng, max_block, 3)
    d = int(rng.integers(1, max_hdim + 1))
    return sampling.kraus_map(rng, alg, d), rng


def test_apply_identity_map(identity_m2):
    a = np.array([[1.0, 2j], [3.0, 4.0]])
    np.testing.assert_allclose(cm.apply(identity_m2, [a]), a)


def test_apply_maximally_mixed_choi(m2):
    phi = cm.from_choi(m2, 2, [np.eye(4) / 2])
    a = np.array([[1.0, 5.0], [7.0, 3.0]])
    np.testing.assert_allclose(cm.apply(phi, [a]), np.trace(a) / 2 * np.eye(2))


def test_apply_pure_state_times_p(m2):
    P = np.array([[1.0, 0.5], [0.5, 1.0]])
    phi = state_times(m2, P)
    np.testing.assert_allclose(cm.apply(phi, [matrix_unit(2, 0, 0)]), P, atol=1e-14)
    np.testing.assert_allclose(cm.apply(phi, [matrix_unit(2, 1, 1)]), 0, atol=1e-14)


def test_from_kraus_examples(m2, identity_m2, a11_map):
    assert cm.maps_close(cm.from_kraus(m2, 2, [[np.eye(2)]]), identity_m2)
    a = np.array([[2.0, 1.0], [1.0, 5.0]])
    np.testing.assert_allclose(cm.apply(a11_map, [a]), 2.0 * np.eye(2))
    zero = cm.from_kraus(m2, 2, [[]])
    assert all(np.all(C == 0) for C in zero.choi)


def test_choi_block_convention(identity_m2):
    # (p, q) sub-block of the Choi matrix is Phi(E_pq)
    C4 = identity_m2.block4(0)
    for p in range(2):
        for q in range(2):
            np.testing.assert_allclose(C4[p, :, q, :], matrix_unit(2, p, q))


def test_verify_examples(m2, identity_m2):
    rep = cm.verify(identity_m2)
    assert rep.is_cp and rep.is_unital and rep.is_contractive
    assert rep.unit.tag == "Invertible" and rep.norm == pytest.approx(1.0)

    phi = state_times(m2, np.diag([1.0, 0.5]))
    rep = cm.verify(phi)
    assert rep.is_cp and rep.is_contractive and not rep.is_unital
    assert rep.unit.tag == "Invertible" and rep.norm == pytest.approx(1.0)

    C = np.zeros((4, 4))
    C[:2, :2] = [[1.0, 2.0], [2.0, 1.0]]
    rep = cm.verify(cm.from_choi(m2, 2, [C]))
    assert not rep.is_cp
    assert rep.min_eigenvalues[0] == pytest.approx(-1.0)


def test_cp_order_examples(a11_map, diag_map, corner_map):
    assert cm.cp_order(0.3 * a11_map, a11_map)
    assert not cm.cp_order(a11_map, 0.3 * a11_map)
    assert cm.cp_order(corner_map, diag_map)


def test_adjoin_examples(identity_m2, m2):
    rng = np.random.default_rng(2)
    phi, _ = random_map(3)
    assert cm.maps_close(cm.adjoin(phi, np.eye(phi.hdim)), phi)
    U = sampling.unitary(rng, 2)
    a = np.array([[1.0, 2.0], [0.5j, -1.0]])
    np.testing.assert_allclose(cm.apply(cm.adjoin(identity_m2, U), [a]), U.conj().T @ a @ U, atol=1e-14)
    P = sampling.psd(rng, 2)
    lifted = cm.adjoin(identity_m2, la.psd_sqrt(P))
    np.testing.assert_allclose(cm.unit(lifted), P, atol=1e-14)


def test_hat_examples(m2, identity_m2):
    phi = state_times(m2, np.diag([1.0, 0.5]))
    expected = state_times(m2, np.eye(2))
    assert cm.maps_close(cm.hat(phi), expected)
    assert cm.maps_close(cm.hat(identity_m2), identity_m2)
    assert cm.maps_close(cm.hat(0.5 * identity_m2), identity_m2)


def test_direct_sum_examples(m2, identity_m2, diag_map):
    psi1 = cm.from_kraus(m2, 1, [[np.array([[1.0], [0.0]])]])
    psi2 = cm.from_kraus(m2, 1, [[np.array([[0.0], [1.0]])]])
    assert cm.maps_close(cm.direct_sum(psi1, psi2), diag_map)
    s = cm.direct_sum(identity_m2, cm.zero_map(m2, 1))
    np.testing.assert_allclose(cm.unit(s), np.diag([1.0, 1.0, 0.0]))
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    out = cm.apply(cm.direct_sum(identity_m2, identity_m2), [a])
    np.testing.assert_allclose(out, np.kron(np.eye(2), a))


def test_direct_sum_algebra_mismatch(identity_m2):
    with pytest.raises(AlgebraMismatch):
        cm.direct_sum(identity_m2, cm.zero_map(cm.algebra(3), 1))


def test_adjoin_dimension_mismatch(identity_m2):
    with pytest.raises(DimMismatch):
        cm.adjoin(identity_m2, np.eye(3))


def test_compress_to_range_examples(m2, identity_m2, corner_map):
    rc = cm.compress_to_range(identity_m2)
    np.testing.assert_allclose(rc.range_basis, np.eye(2))
    assert cm.maps_close(rc.compressed, identity_m2)

    rc = cm.compress_to_range(corner_map)
    assert rc.compressed.hdim == 1
    a = np.array([[3.0, 1.0], [1.0, 2.0]])
    np.testing.assert_allclose(cm.apply(rc.compressed, [a]), [[3.0]], atol=1e-14)

    rc = cm.compress_to_range(cm.zero_map(m2, 2))
    assert rc.compressed.hdim == 0


def test_compress_rejects_non_cp_input(m2):
    # Phi(1) = diag(1, 0) while Phi(E_12) reaches the kernel; only possible without CP
    C = np.zeros((4, 4), dtype=complex)
    C[0, 0] = 1.0
    C[0, 3] = C[3, 0] = 0.5
    with pytest.raises(NotCP):
        cm.compress_to_range(cm.from_choi(m2, 2, [C]))


def test_is_homomorphism_examples(identity_m2, diag_map):
    assert cm.is_homomorphism(identity_m2)
    assert not cm.is_homomorphism(diag_map)
    c3 = cm.algebra(1, 1, 1)
    Q1, Q2 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    phi = cm.from_choi(c3, 2, [Q1, Q2, np.zeros((2, 2))])
    assert cm.is_homomorphism(phi)


def test_classify_unit():
    assert cm.classify_unit(np.zeros((2, 2))).tag == "Zero"
    uc = cm.classify_unit(np.eye(2))
    assert uc.tag == "Invertible" and uc.is_projection
    assert cm.classify_unit(np.diag([1.0, 0.0])).tag == "Projection"
    assert cm.classify_unit(np.diag([0.5, 0.0])).tag == "GeneralPSD"


@settings(max_examples=50, deadline=None)
@given(seed=SEEDS)
def test_choi_kraus_round_trip(seed):
    phi, _ = random_map(seed)
    back = cm.from_kraus(phi.algebra, phi.hdim, cm.kraus_of(phi))
    assert cm.maps_close(back, phi)


@settings(max_examples=50, deadline=None)
@given(seed=SEEDS)
def test_apply_linear_and_star_preserving(seed):
    phi, rng = random_map(seed)
    a = cm.random_element(phi.algebra, rng)
    b = cm.random_element(phi.algebra, rng)
    alpha = 0.3 - 1.7j
    lhs = cm.apply(phi, [alpha * x + y for x, y in zip(a, b)])
    assert la.relative_error(lhs, alpha * cm.apply(phi, a) + cm.apply(phi, b)) <= 1e-8
    star = cm.apply(phi, [x.conj().T for x in a])
    assert la.relative_error(cm.apply(phi, a).conj().T, star) <= 1e-8


@settings(max_examples=50, deadline=None)
@given(seed=SEEDS, m=st.integers(0, 4), k=st.integers(0, 4))
def test_adjoin_composition(seed, m, k):
    phi, rng = random_map(seed)
    S = sampling.ginibre(rng, phi.hdim, m)
    T = sampling.ginibre(rng, m, k)
    assert cm.map_distance(cm.adjoin(cm.adjoin(phi, S), T), cm.adjoin(phi, S @ T)) <= 1e-8


@settings(max_examples=50, deadline=None)
@given(seed=SEEDS)
def test_hat_reconstructs_and_is_idempotent(seed):
    phi, _ = random_map(seed)
    if not la.is_invertible(cm.unit(phi)):
        return
    h = cm.hat(phi)
    assert cm.is_unital(h)
    assert cm.maps_close(cm.adjoin(h, la.psd_sqrt(cm.unit(phi))), phi)
    assert cm.maps_close(cm.hat(h), h)


@settings(max_examples=50, deadline=None)
@given(seed=SEEDS)
def test_compress_reconstruction(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 5))
    alg = sampling.algebra(rng, 3, 2)
    phi = cm.adjoin(sampling.kraus_map(rng, alg, d), sampling.unit_matrix("singular", d, rng))
    rc = cm.compress_to_range(phi)
    assert cm.maps_close(rc.embed(rc.compressed), phi)
    assert rc.compressed.hdim == 0 or la.is_invertible(cm.unit(rc.compressed))
