import numpy as np
import pytest

from cpext import certificates as ct
from cpext import cpmap as cm
from cpext import extremal as ex
from cpext import sampling
from cpext.certificates import EXTREME, NOT_EXTREME
from cpext.errors import ModelMismatch, NotCommutativeAlgebra, NotContractive, NotUnital

from conftest import state_times

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])


def test_ucp_examples(identity_m2, a11_map, diag_map):
    v = ex.ucp_cstar_extreme(identity_m2)
    assert v.kind == EXTREME and len(v.certificate.summands()) == 1
    assert ct.check_verdict(identity_m2, v).ok

    v = ex.ucp_cstar_extreme(a11_map)
    assert v.kind == EXTREME and len(v.certificate.summands()) == 2
    assert ct.check_verdict(a11_map, v).ok

    v = ex.ucp_cstar_extreme(diag_map)
    assert v.kind == NOT_EXTREME
    assert v.diagnostics["nesting_failures"]
    assert ct.check_verdict(diag_map, v).ok


def test_ucp_rejects_non_unital(corner_map):
    with pytest.raises(NotUnital):
        ex.ucp_cstar_extreme(corner_map)


def test_cp_p_examples(m2):
    rng = np.random.default_rng(5)
    P = sampling.psd(rng, 3, 2)
    pure_state = state_times(m2, P)
    v = ex.cp_p_cstar_extreme(pure_state)
    assert v.kind == EXTREME and ct.check_verdict(pure_state, v).ok

    mixed = state_times(m2, P, weights=(0.5, 0.5))
    v = ex.cp_p_cstar_extreme(mixed)
    assert v.kind == NOT_EXTREME and ct.check_verdict(mixed, v).ok

    T = sampling.ginibre(rng, 2, 3)
    pure = cm.adjoin(cm.identity_map(2), T)
    v = ex.cp_p_cstar_extreme(pure)
    assert v.kind == EXTREME and ct.check_verdict(pure, v).ok


def test_ccp_examples(m2, corner_map):
    v = ex.ccp_cstar_extreme(corner_map)
    assert v.kind == EXTREME and ct.check_verdict(corner_map, v).ok

    half = state_times(m2, np.diag([1.0, 0.5]))
    v = ex.ccp_cstar_extreme(half)
    assert v.kind == NOT_EXTREME
    assert v.diagnostics["route"] == "unit is not a projection"
    assert ct.check_verdict(half, v).ok

    zero = cm.zero_map(m2, 2)
    assert ex.ccp_cstar_extreme(zero).kind == EXTREME


def test_ccp_rejects_non_contractive(identity_m2):
    with pytest.raises(NotContractive):
        ex.ccp_cstar_extreme(2.0 * identity_m2)


def test_decide_model_selection(identity_m2, corner_map, m2):
    assert ex.decide(identity_m2, seed=0)[0] == "ucp"
    assert ex.decide(corner_map, seed=0)[0] == "ccp"
    assert ex.decide(state_times(m2, np.diag([1.0, 0.5])), seed=0)[0] == "cp-p"
    with pytest.raises(ModelMismatch):
        ex.decide(2.0 * identity_m2, "ccp")
    with pytest.raises(ModelMismatch):
        ex.decide(corner_map, "ucp")


def test_linear_extreme_examples(identity_m2, a11_map, m2):
    assert ex.linear_extreme(identity_m2)[0]
    assert ex.linear_extreme(a11_map)[0]
    mix = 0.5 * identity_m2 + 0.5 * cm.adjoin(identity_m2, SIGMA_X)
    ok, witness = ex.linear_extreme(mix)
    assert not ok
    plus, minus, t = witness
    assert cm.maps_close(t * plus + (1 - t) * minus, mix)
    assert not cm.maps_close(plus, minus)
    assert cm.is_unital(plus) and cm.is_unital(minus)


def test_equivalent_unitary_examples(identity_m2, diag_map, a11_map):
    rng = np.random.default_rng(1)
    U = sampling.unitary(rng, 2)
    psi = cm.adjoin(identity_m2, U)
    same, W = ex.equivalent_unitary(identity_m2, psi, seed=0)
    assert same and cm.maps_close(cm.adjoin(identity_m2, W), psi)
    assert not ex.equivalent_unitary(diag_map, a11_map, seed=0)[0]
    same, W = ex.equivalent_unitary(diag_map, diag_map, seed=0)
    assert same


def test_equivalent_invertible_examples(identity_m2, diag_map, a11_map):
    rng = np.random.default_rng(2)
    Z = sampling.ginibre(rng, 2, 2) + 2 * np.eye(2)
    phi = cm.adjoin(diag_map, sampling.psd(rng, 2))
    psi = cm.adjoin(phi, Z)
    same, W = ex.equivalent_invertible(phi, psi, seed=0)
    assert same and cm.maps_close(cm.adjoin(phi, W), psi)

    same, W = ex.equivalent_invertible(identity_m2, 0.4 * identity_m2, seed=0)
    assert same and cm.maps_close(cm.adjoin(identity_m2, W), 0.4 * identity_m2)
    assert not ex.equivalent_invertible(cm.hat(diag_map), cm.hat(a11_map), seed=0)[0]


def test_commutative_form_examples():
    c2 = cm.algebra(1, 1)
    E11, E22 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    phi = cm.from_choi(c2, 2, [E11, E22])
    form = ex.commutative_form(phi)
    assert form["points"] == [0, 1]
    np.testing.assert_allclose(form["projections"][0], E11, atol=1e-14)

    avg = cm.from_choi(c2, 2, [np.eye(2) / 2, np.eye(2) / 2])
    assert ex.commutative_form(avg) is None
    assert ex.ccp_cstar_extreme(avg).kind == NOT_EXTREME
    assert ex.ccp_cstar_extreme(phi).kind == EXTREME
    assert cm.is_homomorphism(phi) and not cm.is_homomorphism(avg)


def test_commutative_form_requires_commutative(identity_m2):
    with pytest.raises(NotCommutativeAlgebra):
        ex.commutative_form(identity_m2)


def test_seeded_verdicts_are_deterministic(diag_map):
    a = ex.ucp_cstar_extreme(diag_map, seed=11)
    b = ex.ucp_cstar_extreme(diag_map, seed=11)
    for (Ta, _), (Tb, _) in zip(a.witness.terms, b.witness.terms):
        np.testing.assert_array_equal(Ta, Tb)


def test_witness_checker_catches_tampering(diag_map):
    v = ex.ucp_cstar_extreme(diag_map)
    T, term = v.witness.terms[0]
    v.witness.terms[0] = (1.1 * T, term)
    res = ct.check_verdict(diag_map, v)
    assert not res.ok and "coefficient identity fails" in res.failures


def test_structure_checker_catches_unnested_ranges(diag_map, a11_map):
    cert = ex.ucp_cstar_extreme(a11_map).certificate
    res = ct.check_structure(diag_map, cert)
    assert not res.ok
