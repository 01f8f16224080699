"""Extremality decisions with certificates and witnesses.

The C*-extremality test is structural: a unital map is split into
indecomposable summands using minimal projections of its range commutant,
every summand must be pure, and pure summands sitting on the same algebra
block must have dilation ranges that form a chain.  Failing maps get an
explicit two-term decomposition built from a Radon-Nikodym derivative.
"""

from __future__ import annotations

import numpy as np

from . import cpmap as cm
from . import dilation as dl
from . import linalg as la
from . import sampling
from .certificates import (
    EXTREME,
    INCONCLUSIVE,
    NOT_EXTREME,
    DecompositionWitness,
    NestedStructure,
    PureSummand,
    Verdict,
    check_witness,
    equivalence_obstruction,
)
from .cpmap import CpMap
from .errors import (
    DimMismatch,
    ModelMismatch,
    NotCommutativeAlgebra,
    NotContractive,
    NotCP,
    NotUnital,
    NumericalError,
)
from .linalg import DEFAULT_TOL, Tolerances

SAMPLES = 16
CLUSTER_GAP = 1e-4
WITNESS_FLOOR = 0.25
WITNESS_T = 0.5


def _null_space(rows: np.ndarray, scale: float, tol: Tolerances) -> list[np.ndarray]:
    """Orthonormal null vectors of ``rows`` with singular values below ``inv_cut * scale``."""
    n = rows.shape[1]
    if rows.shape[0] == 0:
        return [np.eye(n, dtype=complex)[k] for k in range(n)]
    _, s, Vh = np.linalg.svd(rows)
    cut = tol.inv_cut * max(scale, s[0] if s.size else 0.0)
    rank = int(np.sum(s > cut))
    return [Vh[k].conj() for k in range(rank, n)]


def _images(phi: CpMap) -> list[np.ndarray]:
    return [phi.at_unit(i, p, q) for i, p, q in phi.algebra.matrix_units()]


def _intertwiners(phi: CpMap, psi: CpMap, tol: Tolerances) -> list[np.ndarray]:
    """Basis of ``{X : X Psi(a) = Phi(a) X}``, orthonormal in the trace inner product."""
    d = phi.hdim
    eye = np.eye(d)
    pairs = list(zip(_images(phi), _images(psi)))
    rows = np.vstack([np.kron(eye, b.T) - np.kron(a, eye) for a, b in pairs]) if pairs else np.zeros((0, d * d))
    scale = max([la.fro(a) for a, _ in pairs] + [la.fro(b) for _, b in pairs] + [0.0])
    return [v.reshape(d, d) for v in _null_space(rows, scale, tol)]


def range_commutant(phi: CpMap, tol: Tolerances = DEFAULT_TOL) -> list[np.ndarray]:
    """Basis of ``{X : X Phi(a) = Phi(a) X for all a}``; a unital *-algebra."""
    return _intertwiners(phi, phi, tol)


def _random_hermitian(basis: list[np.ndarray], rng: np.random.Generator) -> np.ndarray:
    coeff = rng.standard_normal(len(basis)) + 1j * rng.standard_normal(len(basis))
    X = sum(c * B for c, B in zip(coeff, basis))
    return la.hermitian_part(X)


def _eigen_clusters(H: np.ndarray) -> list[np.ndarray]:
    w, U = np.linalg.eigh(H)
    spread = max(w[-1] - w[0], 1e-300)
    cuts = np.flatnonzero(np.diff(w) > CLUSTER_GAP * spread) + 1
    return [U[:, idx] for idx in np.split(np.arange(w.size), cuts)]


def indecomposable_subspaces(phi: CpMap, rng: np.random.Generator,
                             tol: Tolerances = DEFAULT_TOL) -> list[np.ndarray]:
    """Orthonormal bases ``W_k`` with ``Phi = sum_k W_k (W_k* Phi W_k) W_k*`` and each piece indecomposable."""
    out: list[np.ndarray] = []
    stack = [np.eye(phi.hdim, dtype=complex)]
    while stack:
        W = stack.pop()
        basis = range_commutant(cm.adjoin(phi, W), tol)
        if len(basis) <= 1:
            out.append(W)
            continue
        for _ in range(SAMPLES):
            clusters = _eigen_clusters(_random_hermitian(basis, rng))
            if len(clusters) > 1:
                stack.extend(W @ Uc for Uc in reversed(clusters))
                break
        else:
            raise NumericalError("could not split a summand with a nontrivial range commutant")
    return out


def _pure_summand(phi: CpMap, W: np.ndarray, tol: Tolerances) -> tuple[PureSummand | None, CpMap]:
    piece = cm.adjoin(phi, W)
    ranks = cm.choi_ranks(piece, tol)
    if sum(ranks) != 1:
        return None, piece
    block = ranks.index(1)
    K = cm.kraus_of(piece, tol)[block][0]
    rng, _ = la.range_basis(K, tol)
    return PureSummand(block, W, K, rng, piece), piece


def _nesting_failures(groups: list[tuple[int, list[PureSummand]]], tol: Tolerances) -> list[dict]:
    bad = []
    for block, group in groups:
        for big, small in zip(group, group[1:]):
            excess = la.subspace_excess(small.range, big.range)
            if excess > tol.eq_tol:
                bad.append({"block": block, "dims": [big.range.shape[1], small.range.shape[1]], "excess": excess})
    return bad


def _ucp_witness(phi: CpMap, rng: np.random.Generator, seed: int,
                 tol: Tolerances) -> DecompositionWitness | None:
    """Two-term proper C*-convex decomposition with a non-equivalent term.

    ``D`` ranges over random positive contractions of the dilation commutant
    with spectrum in ``[WITNESS_FLOOR, 1]``; ``Psi = V* D pi(.) V`` then has an
    invertible unit ``B*B`` and the terms are ``hat(Psi)`` with coefficient
    ``sqrt(t) B`` and ``Ad_{C^{-1}}(Phi - t Psi)`` with ``C*C = I - t B*B``.
    """
    d = phi.hdim
    dil = dl.minimal_dilation(phi, tol)
    candidates = []
    for _ in range(SAMPLES):
        blocks = []
        for r in dil.mult:
            U = sampling.unitary(rng, r)
            blocks.append((U * rng.uniform(WITNESS_FLOOR, 1.0, size=r)) @ U.conj().T)
        psi = dl.dilated_map(dil, dl.CommutantElement(tuple(blocks)))
        B = la.psd_sqrt(cm.unit(psi), tol)
        candidates.append((psi, B, cm.adjoin(psi, np.linalg.inv(B))))

    def build(psi, B, head, evidence):
        C = la.douglas_complete(np.eye(d), la.hermitian_part(cm.unit(psi)), WITNESS_T, tol)
        tail = cm.adjoin(phi - WITNESS_T * psi, np.linalg.inv(C))
        wit = DecompositionWitness(
            weight=np.eye(d, dtype=complex),
            terms=[(np.sqrt(WITNESS_T) * B, head), (C, tail)],
            nonequiv_index=0,
            equivalence="unitary",
            evidence=evidence,
            model="ucp",
        )
        return wit if check_witness(phi, wit, tol).ok else None

    for psi, B, head in candidates:
        found = equivalence_obstruction(phi, head, "unitary", tol)
        if found is not None:
            wit = build(psi, B, head, found)
            if wit is not None:
                return wit
    for psi, B, head in candidates:
        same, _ = equivalent_unitary(phi, head, tol, seed)
        if not same:
            wit = build(psi, B, head, {"kind": "sampled", "samples": SAMPLES, "seed": seed})
            if wit is not None:
                return wit
    return None


def _decide_unital(phi: CpMap, seed: int, tol: Tolerances) -> Verdict:
    rng = np.random.default_rng(seed)
    d = phi.hdim
    if d == 0:
        return Verdict(EXTREME, NestedStructure([], np.zeros((0, 0), dtype=complex), np.zeros((0, 0), dtype=complex)))
    try:
        pieces = indecomposable_subspaces(phi, rng, tol)
    except NumericalError as exc:
        return Verdict(INCONCLUSIVE, diagnostics={"reason": str(exc)})
    summands, impure = [], []
    for W in pieces:
        summand, piece = _pure_summand(phi, W, tol)
        if summand is None:
            impure.append({"dim": W.shape[1], "choi_ranks": cm.choi_ranks(piece, tol)})
        else:
            summands.append(summand)
    by_block: dict[int, list[PureSummand]] = {}
    for s in summands:
        by_block.setdefault(s.block, []).append(s)
    groups = [(b, sorted(by_block[b], key=lambda s: -s.range.shape[1])) for b in sorted(by_block)]
    unnested = _nesting_failures(groups, tol)
    diagnostics = {
        "summand_dims": [W.shape[1] for W in pieces],
        "impure_summands": impure,
        "nesting_failures": unnested,
    }
    if not impure and not unnested:
        S = np.vstack([s.basis.conj().T for _, g in groups for s in g])
        cert = NestedStructure(groups, S, np.zeros((d, 0), dtype=complex), "ucp")
        return Verdict(EXTREME, certificate=cert, diagnostics=diagnostics)
    wit = _ucp_witness(phi, rng, seed, tol)
    if wit is None:
        diagnostics["reason"] = "structure fails but no verifying witness was found"
        return Verdict(INCONCLUSIVE, diagnostics=diagnostics)
    return Verdict(NOT_EXTREME, witness=wit, diagnostics=diagnostics)


def ucp_cstar_extreme(phi: CpMap, tol: Tolerances = DEFAULT_TOL, seed: int = 0) -> Verdict:
    """C*-extremality of a unital CP map."""
    if not cm.is_cp(phi, tol):
        raise NotCP("map is not completely positive")
    if not cm.is_unital(phi, tol):
        raise NotUnital("Phi(1) differs from the identity")
    return _decide_unital(phi, seed, tol)


def cp_p_cstar_extreme(phi: CpMap, tol: Tolerances = DEFAULT_TOL, seed: int = 0) -> Verdict:
    """P-C*-extremality inside ``CP^(P)`` with ``P = Phi(1)``.

    Compresses to ``ran P``, renormalizes to a unital map, decides that, and
    conjugates the certificate or witness back.
    """
    if not cm.is_cp(phi, tol):
        raise NotCP("map is not completely positive")
    rc = cm.compress_to_range(phi, tol)
    Q0, Q1 = rc.range_basis, rc.kernel_basis
    d0 = Q0.shape[1]
    P = la.hermitian_part(cm.unit(phi))
    if d0 == 0:
        cert = NestedStructure([], np.eye(phi.hdim, dtype=complex), Q1, "cp-p")
        return Verdict(EXTREME, certificate=cert, diagnostics={"range_dim": 0})
    P0 = la.hermitian_part(cm.unit(rc.compressed))
    root, inv_root = la.psd_sqrt(P0, tol), la.psd_inv_sqrt(P0, tol)
    inner = _decide_unital(cm.adjoin(rc.compressed, inv_root), seed, tol)
    diagnostics = dict(inner.diagnostics, range_dim=d0, offdiagonal_leak=rc.leak)

    if inner.kind == EXTREME:
        groups = []
        for block, group in inner.certificate.groups:
            groups.append((block, [PureSummand(s.block, Q0 @ s.basis, s.kraus, s.range, s.map) for s in group]))
        S0 = inner.certificate.conjugator @ root @ Q0.conj().T
        S = np.vstack([S0, Q1.conj().T])
        return Verdict(EXTREME, certificate=NestedStructure(groups, S, Q1, "cp-p"), diagnostics=diagnostics)
    if inner.kind == INCONCLUSIVE:
        return Verdict(INCONCLUSIVE, diagnostics=diagnostics)

    terms = []
    for T_u, term in inner.witness.terms:
        T0 = inv_root @ T_u @ root
        terms.append((rc.lift_operator(T0), rc.embed(cm.adjoin(term, root))))
    flagged = terms[inner.witness.nonequiv_index][1]
    evidence = equivalence_obstruction(phi, flagged, "invertible", tol)
    if evidence is None:
        evidence = {"kind": "sampled", "samples": SAMPLES, "seed": seed}
    wit = DecompositionWitness(P, terms, inner.witness.nonequiv_index, "invertible", evidence, "cp-p")
    return Verdict(NOT_EXTREME, witness=wit, diagnostics=diagnostics)


def _projection_witness(phi: CpMap, tol: Tolerances) -> DecompositionWitness:
    """Two-term C*-convex witness for a contractive map whose unit is not a projection.

    On ``ran P (+) ker P`` the coefficients are ``diag(P0^{1/2}, I)/sqrt2`` and
    ``diag((2 - P0)^{1/2}, I)/sqrt2`` and the terms are
    ``Ad_{T_j^{-1}/sqrt2} Phi``; the first term has a projection unit.
    """
    rc = cm.compress_to_range(phi, tol)
    P0 = la.hermitian_part(cm.unit(rc.compressed))
    k = rc.kernel_basis.shape[1]
    half = np.eye(k) / np.sqrt(2)
    T1 = rc.lift_operator(la.psd_sqrt(P0, tol) / np.sqrt(2), half)
    T2 = rc.lift_operator(la.psd_sqrt(2 * np.eye(P0.shape[0]) - P0, tol) / np.sqrt(2), half)
    terms = [(T, cm.adjoin(phi, np.linalg.inv(T) / np.sqrt(2))) for T in (T1, T2)]
    evidence = equivalence_obstruction(phi, terms[0][1], "unitary", tol) or {"kind": "sampled"}
    return DecompositionWitness(np.eye(phi.hdim, dtype=complex), terms, 0, "unitary", evidence, "ccp")


def ccp_cstar_extreme(phi: CpMap, tol: Tolerances = DEFAULT_TOL, seed: int = 0) -> Verdict:
    """C*-extremality among contractive CP maps.

    Extreme points have a projection unit; for those the decision reduces to
    the ``CP^(P)`` test, with conjugators and coefficients made C*-convex.
    """
    if not cm.is_cp(phi, tol):
        raise NotCP("map is not completely positive")
    if not cm.is_contractive(phi, tol):
        raise NotContractive("Phi(1) is not below the identity")
    d = phi.hdim
    uc = cm.classify_unit(cm.unit(phi), tol)
    if uc.tag == "Zero":
        cert = NestedStructure([], np.eye(d, dtype=complex), np.eye(d, dtype=complex), "ccp")
        return Verdict(EXTREME, certificate=cert, diagnostics={"unit_class": "Zero"})
    if not uc.is_projection:
        wit = _projection_witness(phi, tol)
        return Verdict(NOT_EXTREME, witness=wit, diagnostics={"unit_class": uc.tag, "route": "unit is not a projection"})

    inner = cp_p_cstar_extreme(phi, tol, seed)
    diagnostics = dict(inner.diagnostics, unit_class=uc.tag)
    if inner.kind == EXTREME:
        cert = inner.certificate
        cert = NestedStructure(cert.groups, la.polar_unitary(cert.conjugator), cert.kernel, "ccp")
        return Verdict(EXTREME, certificate=cert, diagnostics=diagnostics)
    if inner.kind == INCONCLUSIVE:
        return Verdict(INCONCLUSIVE, diagnostics=diagnostics)
    rc = cm.compress_to_range(phi, tol)
    Q0 = rc.range_basis
    k = rc.kernel_basis.shape[1]
    n = len(inner.witness.terms)
    terms = []
    for T, term in inner.witness.terms:
        X = Q0.conj().T @ T @ Q0
        terms.append((rc.lift_operator(X, np.eye(k) / np.sqrt(n)), term))
    flagged = terms[inner.witness.nonequiv_index][1]
    evidence = equivalence_obstruction(phi, flagged, "unitary", tol)
    if evidence is None:
        same, _ = equivalent_unitary(phi, flagged, tol, seed)
        if same:
            return Verdict(INCONCLUSIVE, diagnostics=dict(diagnostics, reason="flagged term is unitarily equivalent"))
        evidence = {"kind": "sampled", "samples": SAMPLES, "seed": seed}
    wit = DecompositionWitness(np.eye(d, dtype=complex), terms, inner.witness.nonequiv_index, "unitary", evidence, "ccp")
    return Verdict(NOT_EXTREME, witness=wit, diagnostics=diagnostics)


MODELS = ("auto", "ucp", "cp-p", "ccp")


def select_model(phi: CpMap, tol: Tolerances = DEFAULT_TOL) -> str:
    """``ucp`` for unital maps, ``ccp`` for projection (or zero) units, else ``cp-p``."""
    if cm.is_unital(phi, tol):
        return "ucp"
    if cm.classify_unit(cm.unit(phi), tol).is_projection:
        return "ccp"
    return "cp-p"


def decide(phi: CpMap, model: str = "auto", tol: Tolerances = DEFAULT_TOL,
           seed: int = 0) -> tuple[str, Verdict]:
    """Run the decider for ``model``; returns the model actually used and the verdict."""
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}")
    if not cm.is_cp(phi, tol):
        raise NotCP("map is not completely positive")
    if model == "auto":
        model = select_model(phi, tol)
    if model == "ucp" and not cm.is_unital(phi, tol):
        raise ModelMismatch("ucp model requested for a non-unital map")
    if model == "ccp" and not cm.is_contractive(phi, tol):
        raise ModelMismatch("ccp model requested for a non-contractive map")
    decider = {"ucp": ucp_cstar_extreme, "cp-p": cp_p_cstar_extreme, "ccp": ccp_cstar_extreme}[model]
    return model, decider(phi, tol, seed)


def linear_extreme(phi: CpMap, tol: Tolerances = DEFAULT_TOL) -> tuple[bool, tuple[CpMap, CpMap, float] | None]:
    """Linear extremality in ``CP^(P)``.

    The map is extreme iff the products ``K_{i,s}* K_{i,t}`` are linearly
    independent.  Otherwise a Hermitian null direction ``M`` gives
    ``Phi = (Phi_+ + Phi_-)/2`` with ``Phi_+- = V* (I +- M/||M||) pi(.) V``.
    """
    if not cm.is_cp(phi, tol):
        raise NotCP("map is not completely positive")
    dil = dl.minimal_dilation(phi, tol)
    index, cols = [], []
    for i, ops in enumerate(dil.kraus):
        for s, Ks in enumerate(ops):
            for t, Kt in enumerate(ops):
                index.append((i, s, t))
                cols.append((Ks.conj().T @ Kt).reshape(-1))
    if not cols:
        return True, None
    G = np.column_stack(cols)
    scale = max(la.fro(c) for c in cols)
    null = _null_space(G, scale, tol)
    if not null:
        return True, None
    c = null[0]
    blocks = [np.zeros((r, r), dtype=complex) for r in dil.mult]
    for (i, s, t), value in zip(index, c):
        blocks[i][s, t] = value
    herm = [la.hermitian_part(M) for M in blocks]
    if max(la.fro(M) for M in herm) < 1e-6:
        herm = [la.hermitian_part(-1j * M) for M in blocks]
    top = max(np.linalg.norm(M, 2) for M in herm if M.size)
    eye = dl.identity_element(dil)
    direction = dl.CommutantElement(tuple(M / top for M in herm))
    plus = dl.dilated_map(dil, eye + direction)
    minus = dl.dilated_map(dil, eye + (-1.0) * direction)
    return False, (plus, minus, 0.5)


def equivalent_unitary(phi: CpMap, psi: CpMap, tol: Tolerances = DEFAULT_TOL,
                       seed: int = 0) -> tuple[bool, np.ndarray | None]:
    """Search for a unitary ``U`` with ``Psi = U* Phi U``.

    Rejects on spectral obstructions, then samples random elements of the
    intertwiner space; an invertible sample's polar part is the answer.
    """
    if phi.algebra != psi.algebra or phi.hdim != psi.hdim:
        raise DimMismatch("maps act on different spaces")
    if phi.hdim == 0:
        return True, np.zeros((0, 0), dtype=complex)
    if equivalence_obstruction(phi, psi, "unitary", tol) is not None:
        return False, None
    basis = _intertwiners(phi, psi, tol)
    if not basis:
        return False, None
    rng = np.random.default_rng(seed)
    for _ in range(SAMPLES):
        coeff = rng.standard_normal(len(basis)) + 1j * rng.standard_normal(len(basis))
        X = sum(c * B for c, B in zip(coeff, basis))
        if la.is_invertible(X, tol):
            U = la.polar_unitary(X)
            if cm.maps_close(cm.adjoin(phi, U), psi, tol):
                return True, U
    return False, None


def equivalent_invertible(phi: CpMap, psi: CpMap, tol: Tolerances = DEFAULT_TOL,
                          seed: int = 0) -> tuple[bool, np.ndarray | None]:
    """Search for an invertible ``Z`` with ``Psi = Z* Phi Z``.

    Both maps are compressed to the ranges of their units and renormalized;
    the question then becomes unitary equivalence of the unital forms.
    """
    if phi.algebra != psi.algebra or phi.hdim != psi.hdim:
        raise DimMismatch("maps act on different spaces")
    ra, rb = cm.compress_to_range(phi, tol), cm.compress_to_range(psi, tol)
    if ra.range_basis.shape[1] != rb.range_basis.shape[1]:
        return False, None
    if ra.range_basis.shape[1] == 0:
        return True, np.eye(phi.hdim, dtype=complex)
    Pa = la.hermitian_part(cm.unit(ra.compressed))
    Pb = la.hermitian_part(cm.unit(rb.compressed))
    hat_a = cm.adjoin(ra.compressed, la.psd_inv_sqrt(Pa, tol))
    hat_b = cm.adjoin(rb.compressed, la.psd_inv_sqrt(Pb, tol))
    same, U = equivalent_unitary(hat_a, hat_b, tol, seed)
    if not same:
        return False, None
    core = la.psd_inv_sqrt(Pa, tol) @ U @ la.psd_sqrt(Pb, tol)
    Z = ra.range_basis @ core @ rb.range_basis.conj().T + ra.kernel_basis @ rb.kernel_basis.conj().T
    if not cm.maps_close(cm.adjoin(phi, Z), psi, tol):
        return False, None
    return True, Z


def commutative_form(phi: CpMap, tol: Tolerances = DEFAULT_TOL) -> dict | None:
    """Points ``w_j`` and projections ``Q_j`` with ``Phi(f) = sum f(w_j) P^{1/2} Q_j P^{1/2}``.

    Returns ``None`` when the candidate operators ``P^{-1/2} Phi(delta_w) P^{-1/2}``
    (pseudo-inverse on the kernel of ``P``) are not mutually orthogonal
    projections.
    """
    if not phi.algebra.commutative:
        raise NotCommutativeAlgebra(f"blocks {phi.algebra.blocks} are not all of size one")
    P = la.hermitian_part(cm.unit(phi))
    R = la.psd_inv_sqrt(P, tol)
    root = la.psd_sqrt(P, tol)
    candidates = [R @ la.hermitian_part(C) @ R for C in phi.choi]
    scale = max(1.0, la.fro(P))
    for Q in candidates:
        if la.fro(Q @ Q - Q) > tol.eq_tol * scale:
            return None
    for a in range(len(candidates)):
        for b in range(a + 1, len(candidates)):
            if la.fro(candidates[a] @ candidates[b]) > tol.eq_tol * scale:
                return None
    for Q, C in zip(candidates, phi.choi):
        if la.fro(root @ Q @ root - C) > tol.eq_tol * scale:
            return None
    points = [w for w, Q in enumerate(candidates) if np.linalg.norm(Q, 2) > 0.5]
    return {"points": points, "projections": [candidates[w] for w in points]}
