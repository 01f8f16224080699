import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cpext import cpmap as cm
from cpext import convexity as cx
from cpext import extremal as ex
from cpext import linalg as la
from cpext import sampling
from cpext.certificates import EXTREME, NOT_EXTREME
from cpext.convexity import CombinationSpec
from cpext.errors import BadScalar, InfeasibleParams, InvalidSpec, NotCommutativeAlgebra, NotContractive, NotInvertible

from conftest import state_times

SEEDS = st.integers(0, 2**32 - 1)


def test_validate_equal_weights(identity_m2):
    n = 3
    eye = np.eye(2)
    spec = CombinationSpec(eye, [(eye / np.sqrt(n), identity_m2)] * n)
    v = cx.validate(spec, model="cp-p")
    assert v.valid and v.proper and v.residual < 1e-15


def test_validate_similarity_construction(m2):
    rng = np.random.default_rng(3)
    P = sampling.psd(rng, 2)
    S = 0.6 * sampling.unitary(rng, 2)
    r = la.psd_sqrt(P)
    ri = np.linalg.inv(r)
    T1 = ri @ S @ r
    T2 = cx.complete_contraction(P, T1, 0.5)
    phi = state_times(m2, P)
    spec = CombinationSpec(P, [(np.sqrt(0.5) * T1, phi), (T2, phi)])
    v = cx.validate(spec)
    assert v.valid and v.proper


def test_validate_reports_residual(identity_m2):
    P = np.diag([2.0, 1.0])
    eye = np.eye(2)
    v = cx.validate(CombinationSpec(P, [(eye, identity_m2), (eye, identity_m2)]), model="cp")
    assert not v.valid
    assert v.residual == pytest.approx(np.linalg.norm(P) / np.linalg.norm(P))
    assert "coefficient identity" in v.failures


def test_combine_equal_weights(identity_m2, diag_map):
    eye = np.eye(2)
    spec = CombinationSpec(eye, [(eye / np.sqrt(2), identity_m2), (eye / np.sqrt(2), diag_map)])
    assert cm.maps_close(cx.combine(spec), 0.5 * identity_m2 + 0.5 * diag_map)


def test_combine_rejects_bad_coefficients(identity_m2):
    eye = np.eye(2)
    with pytest.raises(InvalidSpec):
        cx.combine(CombinationSpec(eye, [(eye, identity_m2), (eye, identity_m2)]))


def test_km_reduce_unital_input(identity_m2):
    spec = cx.km_reduce_ccp(identity_m2)
    assert cx.validate(spec, model="ccp").valid
    assert cm.maps_close(cx.combine(spec), identity_m2)


def test_km_reduce_half_unit(m2):
    phi = state_times(m2, np.diag([1.0, 0.5]))
    spec = cx.km_reduce_ccp(phi)
    assert cx.validate(spec, model="ccp").valid
    assert cm.maps_close(cx.combine(spec), phi)
    for _, term in spec.terms:
        assert cm.classify_unit(cm.unit(term)).is_projection


def test_km_reduce_rank_deficient_unit(corner_map, m2):
    phi = 0.5 * corner_map
    spec = cx.km_reduce_ccp(phi)
    assert cx.validate(spec, model="ccp").valid
    assert cm.maps_close(cx.combine(spec), phi)
    for _, term in spec.terms:
        assert cm.classify_unit(cm.unit(term)).is_projection


def test_km_reduce_zero_map(m2):
    zero = cm.zero_map(m2, 2)
    spec = cx.km_reduce_ccp(zero)
    assert cx.validate(spec, model="ccp").valid
    assert cm.maps_close(cx.combine(spec), zero)


def test_km_reduce_rejects_non_contractive(identity_m2):
    with pytest.raises(NotContractive):
        cx.km_reduce_ccp(2.0 * identity_m2)


def test_complete_contraction_examples():
    eye = np.eye(2)
    Y = cx.complete_contraction(eye, eye, 0.5)
    np.testing.assert_allclose(Y.conj().T @ Y, eye / 2, atol=1e-14)
    P = np.diag([1.0, 0.0])
    X = np.diag([0.5, 1.0])
    Y = cx.complete_contraction(P, X, 0.5)
    np.testing.assert_allclose(0.5 * X.T @ P @ X + Y.conj().T @ P @ Y, P, atol=1e-14)
    with pytest.raises(BadScalar):
        cx.complete_contraction(eye, eye, 1.0)
    with pytest.raises(NotInvertible):
        cx.complete_contraction(eye, np.diag([1.0, 0.0]), 0.5)


@pytest.mark.parametrize("kind", ["random_cp_p", "pure", "pure_state_times_P", "nested_extreme", "non_extreme_mixture"])
def test_gen_unit_and_determinism(kind):
    alg = cm.algebra(2, 1)
    P = np.diag([1.0, 0.5])
    a = cx.gen(kind, alg, 2, P, seed=4)
    b = cx.gen(kind, alg, 2, P, seed=4)
    assert all(np.array_equal(x, y) for x, y in zip(a.choi, b.choi))
    np.testing.assert_allclose(cm.unit(a), P, atol=1e-12)
    assert cm.is_cp(a)


def test_gen_verdicts_match_kind():
    alg = cm.algebra(2, 1)
    for seed in range(5):
        phi = cx.gen("nested_extreme", alg, 3, seed=seed)
        assert ex.ucp_cstar_extreme(phi).kind == EXTREME
        phi = cx.gen("non_extreme_mixture", alg, 3, seed=seed)
        assert ex.ucp_cstar_extreme(phi).kind == NOT_EXTREME


def test_gen_homomorphism():
    phi = cx.gen("homomorphism", cm.algebra(1, 1, 1), 3, seed=0)
    assert cm.is_homomorphism(phi)
    with pytest.raises(NotCommutativeAlgebra):
        cx.gen("homomorphism", cm.algebra(2), 2, seed=0)
    with pytest.raises(InfeasibleParams):
        cx.gen("homomorphism", cm.algebra(1, 1), 2, np.diag([1.0, 0.5]), seed=0)


def test_gen_infeasible_params():
    with pytest.raises(InfeasibleParams):
        cx.gen("pure", cm.algebra(1), 2, seed=0)
    with pytest.raises(InfeasibleParams):
        cx.gen("non_extreme_mixture", cm.algebra(1), 2, seed=0)
    with pytest.raises(InfeasibleParams):
        cx.gen("random_cp_p", cm.algebra(2), 2, np.diag([1.0, -0.5]), seed=0)


def test_gen_zero_unit():
    phi = cx.gen("nested_extreme", cm.algebra(2), 2, np.zeros((2, 2)), seed=0)
    assert cm.maps_close(phi, cm.zero_map(cm.algebra(2), 2))


@settings(max_examples=30, deadline=None)
@given(seed=SEEDS)
def test_km_reduction_property(seed):
    rng = np.random.default_rng(seed)
    alg = sampling.algebra(rng, 3, 3)
    d = int(rng.integers(1, 4))
    phi = sampling.kraus_map(rng, alg, d)
    phi = (0.9 / max(np.linalg.norm(cm.unit(phi), 2), 1e-12)) * phi
    spec = cx.km_reduce_ccp(phi)
    assert cx.validate(spec, model="ccp").valid
    assert cm.maps_close(cx.combine(spec), phi)
