"""C*-convex combinations, the explicit contractive-to-projection reduction,
and seeded generators for extreme and non-extreme instances."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import cpmap as cm
from . import linalg as la
from . import sampling
from .certificates import NestedStructure, PureSummand, check_structure
from .cpmap import AlgebraSpec, CpMap
from .errors import (
    DimMismatch,
    InfeasibleParams,
    InvalidSpec,
    NotCommutativeAlgebra,
    NotContractive,
    NotCP,
    NotInvertible,
)
from .linalg import DEFAULT_TOL, Tolerances

GEN_KINDS = (
    "random_cp_p",
    "pure",
    "pure_state_times_P",
    "nested_extreme",
    "non_extreme_mixture",
    "homomorphism",
)


@dataclass
class CombinationSpec:
    """Terms ``(T_j, Phi_j)`` meant to satisfy ``sum_j T_j* P T_j = P``."""

    P: np.ndarray = field(repr=False)
    terms: list[tuple[np.ndarray, CpMap]] = field(repr=False)

    def proper(self, tol: Tolerances = DEFAULT_TOL) -> bool:
        return all(la.is_invertible(T, tol) for T, _ in self.terms)


class Validation(NamedTuple):
    valid: bool
    residual: float
    proper: bool
    failures: list


def _coefficient_residual(spec: CombinationSpec) -> float:
    P = np.asarray(spec.P, dtype=complex)
    total = sum((T.conj().T @ P @ T for T, _ in spec.terms), np.zeros_like(P))
    return la.fro(total - P) / max(1.0, la.fro(P))


def _check_dims(spec: CombinationSpec) -> None:
    P = np.asarray(spec.P)
    d = P.shape[0]
    if P.shape != (d, d):
        raise DimMismatch(f"P has shape {P.shape}")
    for T, phi in spec.terms:
        if np.shape(T) != (d, d) or phi.hdim != d:
            raise DimMismatch("term dimensions disagree with P")
    if len({phi.algebra for _, phi in spec.terms}) > 1:
        raise DimMismatch("terms act on different algebras")


def validate(spec: CombinationSpec, tol: Tolerances = DEFAULT_TOL, model: str = "cp-p") -> Validation:
    """Coefficient identity, properness and class membership of the terms.

    ``model`` is ``cp-p`` (each ``Phi_j(1) = P``), ``ccp`` (each term
    contractive) or ``cp`` (complete positivity only).
    """
    _check_dims(spec)
    failures = []
    residual = _coefficient_residual(spec)
    if residual > tol.eq_tol:
        failures.append("coefficient identity")
    P = la.hermitian_part(np.asarray(spec.P, dtype=complex))
    for j, (_, phi) in enumerate(spec.terms):
        if not cm.is_cp(phi, tol):
            failures.append(f"term {j} not CP")
        elif model == "cp-p" and la.relative_error(cm.unit(phi), P) > tol.eq_tol:
            failures.append(f"term {j} unit differs from P")
        elif model == "ccp" and not cm.is_contractive(phi, tol):
            failures.append(f"term {j} not contractive")
    return Validation(not failures, residual, spec.proper(tol), failures)


def combine(spec: CombinationSpec, tol: Tolerances = DEFAULT_TOL) -> CpMap:
    """``sum_j Ad_{T_j} Phi_j``."""
    _check_dims(spec)
    if not spec.terms:
        raise InvalidSpec("no terms")
    if _coefficient_residual(spec) > tol.eq_tol:
        raise InvalidSpec("coefficient identity fails")
    out = cm.zero_map(spec.terms[0][1].algebra, spec.terms[0][1].hdim)
    for T, phi in spec.terms:
        out = out + cm.adjoin(phi, T)
    return out


def km_reduce_ccp(phi: CpMap, tol: Tolerances = DEFAULT_TOL) -> CombinationSpec:
    """Write a contractive map as a two-term C*-convex combination whose terms have projection units.

    Invertible unit: ``Ad_{P^{1/2}} hat(Phi) + Ad_{(I-P)^{1/2}} 0``.  Otherwise,
    on ``ran P (+) ker P``, ``T_1 = diag(P0^{1/2}, I/sqrt2)`` carries
    ``diag(hat(Phi_0), 0)`` and ``T_2 = diag((I-P0)^{1/2}, I/sqrt2)`` carries 0.
    """
    if not cm.is_cp(phi, tol):
        raise NotCP("map is not completely positive")
    if not cm.is_contractive(phi, tol):
        raise NotContractive("Phi(1) is not below the identity")
    d = phi.hdim
    eye = np.eye(d, dtype=complex)
    zero = cm.zero_map(phi.algebra, d)
    P = la.hermitian_part(cm.unit(phi))
    uc = cm.classify_unit(P, tol)
    if uc.tag == "Zero":
        return CombinationSpec(eye, [(eye / np.sqrt(2), zero), (eye / np.sqrt(2), zero)])
    if uc.tag == "Invertible":
        complement = la.psd_function(eye - P, lambda w: np.sqrt(np.clip(w, 0, None)), tol)
        return CombinationSpec(eye, [(la.psd_sqrt(P, tol), cm.hat(phi, tol)), (complement, zero)])
    rc = cm.compress_to_range(phi, tol)
    P0 = la.hermitian_part(cm.unit(rc.compressed))
    half = np.eye(rc.kernel_basis.shape[1]) / np.sqrt(2)
    T1 = rc.lift_operator(la.psd_sqrt(P0, tol), half)
    rest = la.psd_function(np.eye(P0.shape[0]) - P0, lambda w: np.sqrt(np.clip(w, 0, None)), tol)
    T2 = rc.lift_operator(rest, half)
    return CombinationSpec(eye, [(T1, rc.embed(cm.hat(rc.compressed, tol))), (T2, zero)])


def complete_contraction(P, X, t: float, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Invertible ``Y`` with ``t X* P X + Y* P Y = P``."""
    X = la.as_matrix(X, square=True)
    if not la.is_invertible(X, tol):
        raise NotInvertible("X is singular at inv_cut")
    P = la.check_hermitian(P, tol)
    return la.douglas_complete(P, la.hermitian_part(X.conj().T @ P @ X), t, tol)


# -- generators ---------------------------------------------------------------

def _unit_frame(P: np.ndarray, tol: Tolerances):
    """``(Q0, Q1, P0^{1/2})`` for ``P = Q0 P0 Q0*``."""
    P = la.check_hermitian(P, tol)
    if not la.psd_check(P, tol)[0]:
        raise InfeasibleParams("unit P is not PSD")
    Q0, Q1 = la.split_space(P, tol)
    P0 = la.hermitian_part(Q0.conj().T @ P @ Q0)
    return Q0, Q1, la.psd_sqrt(P0, tol)


def _place(psi: CpMap, Q0: np.ndarray, root: np.ndarray, twist: np.ndarray | None = None) -> CpMap:
    """``Ad_S psi`` with ``S = twist P0^{1/2} Q0*``, a map on ``H`` with unit ``P`` when ``psi`` is unital."""
    twist = np.eye(root.shape[0]) if twist is None else twist
    return cm.adjoin(psi, twist @ root @ Q0.conj().T)


def _random_ucp(rng, alg: AlgebraSpec, d0: int, tol: Tolerances) -> CpMap:
    return cm.hat(sampling.kraus_map(rng, alg, d0), tol)


def _nested_summands(rng, alg: AlgebraSpec, d0: int) -> list[tuple[int, np.ndarray]]:
    """Random ``(block, isometry)`` pairs with nested ranges per block and total dimension ``d0``."""
    frames = {i: sampling.unitary(rng, n) for i, n in enumerate(alg.blocks)}
    out = []
    remaining = d0
    while remaining > 0:
        i = int(rng.integers(len(alg)))
        m = int(rng.integers(1, min(alg.blocks[i], remaining) + 1))
        out.append((i, frames[i][:, :m] @ sampling.unitary(rng, m)))
        remaining -= m
    return out


def _nested_map(rng, alg: AlgebraSpec, d0: int):
    summands = _nested_summands(rng, alg, d0)
    maps = []
    for block, K in summands:
        kraus = [[] for _ in alg.blocks]
        kraus[block] = [K]
        maps.append(cm.from_kraus(alg, K.shape[1], kraus))
    return summands, maps


def gen(kind: str, alg: AlgebraSpec, hdim: int, P=None, seed=0, tol: Tolerances = DEFAULT_TOL) -> CpMap:
    """Seeded generator; the emitted map is checked against its advertised class.

    :param kind: one of :data:`GEN_KINDS`.
    :param P: unit image (defaults to the identity).
    """
    rng = sampling.rng_from(seed)
    P = np.eye(hdim, dtype=complex) if P is None else la.as_matrix(P, square=True)
    if P.shape != (hdim, hdim):
        raise DimMismatch(f"P has shape {P.shape}, expected {(hdim, hdim)}")
    Q0, Q1, root = _unit_frame(P, tol)
    d0 = Q0.shape[1]

    if kind == "random_cp_p":
        phi = _place(_random_ucp(rng, alg, d0, tol), Q0, root) if d0 else cm.zero_map(alg, hdim)
        ok = True
    elif kind == "pure":
        fits = [i for i, n in enumerate(alg.blocks) if n >= d0]
        if d0 == 0 or not fits:
            raise InfeasibleParams(f"rank {d0} unit does not fit a pure map on blocks {alg.blocks}")
        block = int(rng.choice(fits))
        K = sampling.isometry(rng, alg.blocks[block], d0) @ root @ Q0.conj().T
        kraus = [[] for _ in alg.blocks]
        kraus[block] = [K]
        phi = cm.from_kraus(alg, hdim, kraus)
        ok = sum(cm.choi_ranks(phi, tol)) == 1
    elif kind == "pure_state_times_P":
        block = int(rng.integers(len(alg)))
        z = sampling.ginibre(rng, alg.blocks[block], 1)[:, 0]
        w = (z / np.linalg.norm(z)).conj()
        choi = [np.zeros((n * hdim, n * hdim), dtype=complex) for n in alg.blocks]
        choi[block] = np.kron(np.outer(w, w.conj()), la.hermitian_part(P))
        phi = CpMap(alg, hdim, tuple(choi))
        ok = True
    elif kind == "nested_extreme":
        if d0 == 0:
            return cm.zero_map(alg, hdim)
        summands, maps = _nested_map(rng, alg, d0)
        order = rng.permutation(len(maps))
        summands = [summands[k] for k in order]
        maps = [maps[k] for k in order]
        twist = sampling.unitary(rng, d0)
        phi = _place(cm.direct_sum_all(maps), Q0, root, twist)
        ok = _nested_self_check(phi, summands, maps, Q0, Q1, root, twist, tol)
    elif kind == "non_extreme_mixture":
        if d0 == 0 or alg.blocks == (1,):
            raise InfeasibleParams("the unital state space is a single point")
        from .extremal import linear_extreme

        for _ in range(8):
            first = cm.direct_sum_all(_nested_map(rng, alg, d0)[1])
            second = _random_ucp(rng, alg, d0, tol)
            if cm.map_distance(first, second) < 1e-3:
                continue
            phi = _place(0.5 * first + 0.5 * second, Q0, root)
            ok = not linear_extreme(phi, tol)[0]
            if ok:
                break
        else:
            raise InfeasibleParams("could not draw a non-extreme mixture")
    elif kind == "homomorphism":
        if not alg.commutative:
            raise NotCommutativeAlgebra("homomorphism generator needs a commutative algebra")
        if not cm.classify_unit(P, tol).is_projection:
            raise InfeasibleParams("a homomorphism has a projection unit")
        frame = Q0 @ sampling.unitary(rng, d0)
        points = rng.integers(len(alg), size=d0)
        choi = []
        for w in range(len(alg)):
            cols = frame[:, points == w]
            choi.append(cols @ cols.conj().T)
        phi = CpMap(alg, hdim, tuple(choi))
        ok = cm.is_homomorphism(phi, tol)
    else:
        raise ValueError(f"unknown generator kind {kind!r}")

    if not (ok and cm.is_cp(phi, tol) and la.relative_error(cm.unit(phi), P) <= tol.eq_tol):
        raise InfeasibleParams(f"generated {kind} map failed its class self-check")
    return phi


def _nested_self_check(phi, summands, maps, Q0, Q1, root, twist, tol) -> bool:
    """Assemble the generation's own nested structure and check it, without the decider."""
    d0 = root.shape[0]
    eye = np.eye(d0)
    groups: dict[int, list[tuple[PureSummand, np.ndarray]]] = {}
    offset = 0
    for (block, K), piece in zip(summands, maps):
        m = K.shape[1]
        slot = eye[:, offset:offset + m]
        summand = PureSummand(block, Q0 @ twist.conj().T @ slot, K, la.range_basis(K, tol)[0], piece)
        groups.setdefault(block, []).append((summand, slot))
        offset += m
    ordered, slots = [], []
    for block in sorted(groups):
        members = sorted(groups[block], key=lambda pair: -pair[0].range.shape[1])
        ordered.append((block, [s for s, _ in members]))
        slots.extend(slot for _, slot in members)
    S = np.vstack([np.hstack(slots).T @ twist @ root @ Q0.conj().T, Q1.conj().T])
    return check_structure(phi, NestedStructure(ordered, S, Q1, "cp-p"), tol).ok
