"""Certificate and witness types, and their independent checkers.

The checkers here only use :mod:`cpext.linalg` and :mod:`cpext.cpmap`; they
re-validate a payload against the input map without re-running any decision
procedure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import cpmap as cm
from . import linalg as la
from .cpmap import CpMap
from .linalg import DEFAULT_TOL, Tolerances

EXTREME = "Extreme"
NOT_EXTREME = "NotExtreme"
INCONCLUSIVE = "Inconclusive"


@dataclass
class PureSummand:
    """One pure unital summand ``a -> K* a_i K`` living on ``span(basis)``."""

    block: int
    basis: np.ndarray = field(repr=False)
    kraus: np.ndarray = field(repr=False)
    range: np.ndarray = field(repr=False)
    map: CpMap = field(repr=False)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


@dataclass
class NestedStructure:
    """Direct-sum form ``Phi = S* ((+) pure summands (+) 0) S``.

    ``groups`` holds ``(block, summands)`` pairs with summands sorted by
    decreasing range dimension, which is the order of the nesting chain.
    The rows of ``conjugator`` follow the order of the summands in
    ``groups`` and then ``kernel``.
    """

    groups: list[tuple[int, list[PureSummand]]]
    conjugator: np.ndarray = field(repr=False)
    kernel: np.ndarray = field(repr=False)
    model: str = "ucp"

    def summands(self) -> list[PureSummand]:
        return [s for _, group in self.groups for s in group]


@dataclass
class DecompositionWitness:
    """Proper two-term decomposition ``Phi = sum_j Ad_{T_j} Phi_j``.

    ``weight`` is the matrix ``R`` of the coefficient identity
    ``sum_j T_j* R T_j = R``: the identity for C*-convex combinations, ``Phi(1)``
    for combinations inside ``CP^(P)``.  ``equivalence`` names the relation
    (``unitary`` or ``invertible``) that term ``nonequiv_index`` fails.
    """

    weight: np.ndarray = field(repr=False)
    terms: list[tuple[np.ndarray, CpMap]] = field(repr=False)
    nonequiv_index: int
    equivalence: str
    evidence: dict
    model: str = "ucp"


@dataclass
class Verdict:
    kind: str
    certificate: NestedStructure | None = None
    witness: DecompositionWitness | None = None
    diagnostics: dict = field(default_factory=dict)


# -- invariants ---------------------------------------------------------------

def _spectrum_gap(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        return float("inf")
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(np.sort(a) - np.sort(b))))


def _choi_gap(phi: CpMap, psi: CpMap) -> float:
    gaps = [_spectrum_gap(a, b) for a, b in zip(cm.choi_spectra(phi), cm.choi_spectra(psi))]
    return max(gaps) if gaps else 0.0


def normalized_form(phi: CpMap, tol: Tolerances = DEFAULT_TOL) -> CpMap:
    """``hat`` of the range compression; a complete invariant carrier for invertible equivalence."""
    compressed = cm.compress_to_range(phi, tol).compressed
    if compressed.hdim == 0:
        return compressed
    return cm.hat(compressed, tol)


def equivalence_obstruction(phi: CpMap, psi: CpMap, kind: str,
                            tol: Tolerances = DEFAULT_TOL) -> dict | None:
    """A spectral invariant separating ``Phi`` from ``Psi``, or ``None``.

    A returned obstruction proves the two maps are not equivalent under
    ``kind`` (``unitary`` or ``invertible``).
    """
    scale = max(1.0, *(la.fro(C) for C in phi.choi + psi.choi))
    threshold = tol.spectral * scale
    if kind == "unitary":
        gap = _spectrum_gap(np.linalg.eigvalsh(la.hermitian_part(cm.unit(phi))),
                            np.linalg.eigvalsh(la.hermitian_part(cm.unit(psi))))
        if gap > threshold:
            return {"kind": "unit_spectrum", "gap": gap}
        gap = _choi_gap(phi, psi)
        if gap > threshold:
            return {"kind": "choi_spectrum", "gap": gap}
        return None
    if kind == "invertible":
        rank_phi = la.range_basis(cm.unit(phi), tol)[1]
        rank_psi = la.range_basis(cm.unit(psi), tol)[1]
        if rank_phi != rank_psi:
            return {"kind": "unit_rank", "gap": float(abs(rank_phi - rank_psi))}
        gap = _choi_gap(normalized_form(phi, tol), normalized_form(psi, tol))
        if gap > tol.spectral * max(1.0, phi.hdim):
            return {"kind": "normalized_choi_spectrum", "gap": gap}
        return None
    raise ValueError(f"unknown equivalence kind {kind!r}")


# -- checkers -----------------------------------------------------------------

@dataclass
class CheckResult:
    ok: bool
    residuals: dict
    failures: list[str]

    def as_dict(self) -> dict:
        return {"ok": self.ok, "residuals": self.residuals, "failures": self.failures}


def check_structure(phi: CpMap, cert: NestedStructure, tol: Tolerances = DEFAULT_TOL) -> CheckResult:
    """Re-validate an extremality certificate against ``Phi``."""
    failures: list[str] = []
    residuals: dict = {}
    d = phi.hdim
    summands = cert.summands()
    S = np.asarray(cert.conjugator)
    if S.shape != (d, d):
        return CheckResult(False, residuals, [f"conjugator shape {S.shape}"])
    if not la.is_invertible(S, tol):
        failures.append("conjugator not invertible")
    if cert.model in ("ucp", "ccp"):
        residuals["conjugator_unitarity"] = la.fro(S.conj().T @ S - np.eye(d)) / max(1.0, np.sqrt(d))
        if residuals["conjugator_unitarity"] > tol.eq_tol:
            failures.append("conjugator not unitary")

    # summand subspaces together with the kernel form an orthonormal basis of H
    columns = [s.basis for s in summands] + [cert.kernel]
    frame = np.hstack(columns) if columns else np.zeros((d, 0))
    if frame.shape != (d, d):
        failures.append(f"subspaces span {frame.shape[1]} of {d} dimensions")
    else:
        residuals["frame_orthonormality"] = la.fro(frame.conj().T @ frame - np.eye(d)) / max(1.0, np.sqrt(d))
        if residuals["frame_orthonormality"] > tol.eq_tol:
            failures.append("summand subspaces not orthonormal")

    worst_pure = 0.0
    for s in summands:
        if s.map.algebra != phi.algebra:
            failures.append("summand algebra mismatch")
            continue
        ranks = cm.choi_ranks(s.map, tol)
        if sum(ranks) != 1 or ranks[s.block] != 1:
            failures.append(f"summand on block {s.block} is not pure (ranks {ranks})")
        if not cm.is_unital(s.map, tol):
            failures.append("summand not unital")
        n = phi.algebra.blocks[s.block]
        kraus_lists = [[] for _ in phi.algebra.blocks]
        kraus_lists[s.block] = [s.kraus]
        worst_pure = max(worst_pure, cm.map_distance(cm.from_kraus(phi.algebra, s.dim, kraus_lists), s.map))
        rng, _ = la.range_basis(s.kraus, tol)
        if rng.shape[1] != s.range.shape[1] or (
            max(la.subspace_excess(rng, s.range), la.subspace_excess(s.range, rng)) > tol.eq_tol
        ):
            failures.append(f"stored range of a block-{s.block} summand disagrees with its Kraus operator")
        if s.range.shape[0] != n:
            failures.append("range basis has wrong ambient dimension")
    residuals["kraus_consistency"] = worst_pure
    if worst_pure > tol.eq_tol:
        failures.append("summand maps disagree with their Kraus operators")

    worst_nest = 0.0
    for block, group in cert.groups:
        if any(s.block != block for s in group):
            failures.append(f"group {block} holds summands of another block")
        for big, small in zip(group, group[1:]):
            if small.range.shape[1] > big.range.shape[1]:
                failures.append(f"group {block} not sorted by range dimension")
            worst_nest = max(worst_nest, la.subspace_excess(small.range, big.range))
    residuals["nesting"] = worst_nest
    if worst_nest > tol.eq_tol:
        failures.append("dilation ranges do not form a chain")

    total = sum(s.dim for s in summands)
    if summands:
        inner = cm.direct_sum_all([s.map for s in summands])
        padded = cm.direct_sum(inner, cm.zero_map(phi.algebra, d - total)) if d > total else inner
    else:
        padded = cm.zero_map(phi.algebra, d)
    if padded.hdim == d:
        residuals["reconstruction"] = cm.map_distance(cm.adjoin(padded, S), phi)
        if residuals["reconstruction"] > tol.eq_tol:
            failures.append("S* (sum of summands) S does not reproduce the map")
    else:
        failures.append("summand dimensions exceed hdim")
    return CheckResult(not failures, residuals, failures)


def check_witness(phi: CpMap, wit: DecompositionWitness, tol: Tolerances = DEFAULT_TOL) -> CheckResult:
    """Re-validate a non-extremality witness against ``Phi``."""
    failures: list[str] = []
    residuals: dict = {}
    d = phi.hdim
    R = np.asarray(wit.weight)
    if R.shape != (d, d):
        return CheckResult(False, residuals, [f"weight shape {R.shape}"])
    coeff = sum((T.conj().T @ R @ T for T, _ in wit.terms), np.zeros((d, d), dtype=complex))
    residuals["coefficient_identity"] = la.fro(coeff - R) / max(1.0, la.fro(R))
    if residuals["coefficient_identity"] > tol.eq_tol:
        failures.append("coefficient identity fails")
    if not all(la.is_invertible(T, tol) for T, _ in wit.terms):
        failures.append("a coefficient is not invertible")
    if len(wit.terms) < 2:
        failures.append("fewer than two terms")

    combined = cm.zero_map(phi.algebra, d)
    for T, term in wit.terms:
        combined = combined + cm.adjoin(term, T)
    residuals["recombination"] = cm.map_distance(combined, phi)
    if residuals["recombination"] > tol.eq_tol:
        failures.append("terms do not recombine to the map")

    P = la.hermitian_part(cm.unit(phi))
    for j, (_, term) in enumerate(wit.terms):
        if not cm.is_cp(term, tol):
            failures.append(f"term {j} not CP")
        if wit.model == "ucp" and not cm.is_unital(term, tol):
            failures.append(f"term {j} not unital")
        if wit.model == "cp-p" and la.relative_error(cm.unit(term), P) > tol.eq_tol:
            failures.append(f"term {j} has the wrong unit image")
        if wit.model == "ccp" and not cm.is_contractive(term, tol):
            failures.append(f"term {j} not contractive")

    kind = wit.evidence.get("kind")
    flagged = wit.terms[wit.nonequiv_index][1] if 0 <= wit.nonequiv_index < len(wit.terms) else None
    residuals["nonequivalence_verified"] = False
    if flagged is None:
        failures.append("flagged term index out of range")
    elif kind == "sampled":
        residuals["nonequivalence_note"] = "established by intertwiner sampling; not re-checkable spectrally"
    else:
        found = equivalence_obstruction(phi, flagged, wit.equivalence, tol)
        if found is None:
            failures.append("no spectral obstruction separates the flagged term")
        else:
            residuals["nonequivalence_verified"] = True
            residuals["nonequivalence_gap"] = found["gap"]
    return CheckResult(not failures, residuals, failures)


def check_verdict(phi: CpMap, verdict: Verdict, tol: Tolerances = DEFAULT_TOL) -> CheckResult:
    if verdict.kind == EXTREME and verdict.certificate is not None:
        return check_structure(phi, verdict.certificate, tol)
    if verdict.kind == NOT_EXTREME and verdict.witness is not None:
        return check_witness(phi, verdict.witness, tol)
    return CheckResult(False, {}, [f"verdict {verdict.kind} carries no checkable payload"])
