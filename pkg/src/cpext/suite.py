"""Seeded property suite: module invariants and the numbered acceptance criteria.

Each property draws its own instances from ``default_rng([seed, crc32(name), i])``
so that results do not depend on which other properties run.
"""

from __future__ import annotations

import time
import zlib
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from . import certificates as ct
from . import convexity as cx
from . import cpmap as cm
from . import dilation as dl
from . import extremal as ex
from . import linalg as la
from . import oracle
from . import sampling
from . import serialize as sz
from .certificates import EXTREME, INCONCLUSIVE, NOT_EXTREME
from .cpmap import AlgebraSpec, CpMap
from .errors import CpextError, InfeasibleParams, NotDominated
from .linalg import DEFAULT_TOL, Tolerances

MAX_FAILURES_KEPT = 5


class Case(NamedTuple):
    ok: bool
    residual: float | None = None
    note: str = ""


@dataclass
class Context:
    seed: int = 0
    count: int | None = None
    max_block: int = 4
    max_hdim: int = 6
    tol: Tolerances = DEFAULT_TOL

    def draw_seed(self, rng: np.random.Generator) -> int:
        return int(rng.integers(2**31))


@dataclass(frozen=True)
class Property:
    name: str
    module: str
    count: int
    check: Callable[[Context, np.random.Generator], Case]
    summary: str


@dataclass
class PropertyResult:
    name: str
    module: str
    cases: int
    passed: int = 0
    failures: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return self.passed == self.cases

    def as_dict(self) -> dict:
        finite = [r for r in self.residuals if r is not None and np.isfinite(r)]
        return {
            "name": self.name,
            "module": self.module,
            "ok": self.ok,
            "cases": self.cases,
            "passed": self.passed,
            "max_residual": max(finite) if finite else None,
            "notes": self.notes,
            "failures": self.failures[:MAX_FAILURES_KEPT],
            "seconds": round(self.seconds, 3),
        }


# -- instance sources ---------------------------------------------------------

def _algebra(ctx: Context, rng, commutative: bool = False, max_blocks: int = 3) -> AlgebraSpec:
    return sampling.algebra(rng, ctx.max_block, max_blocks, commutative)


def _hdim(ctx: Context, rng, low: int = 1) -> int:
    return int(rng.integers(low, max(low, ctx.max_hdim) + 1))


def _random_cp(ctx: Context, rng) -> CpMap:
    return sampling.kraus_map(rng, _algebra(ctx, rng), _hdim(ctx, rng))


def _pure_sum(ctx: Context, rng) -> CpMap:
    """Unital direct sum of random pure maps; ranges on a shared block are generically unnested."""
    alg = _algebra(ctx, rng)
    d = _hdim(ctx, rng)
    kraus = [[] for _ in alg.blocks]
    used = 0
    while used < d:
        i = int(rng.integers(len(alg)))
        m = int(rng.integers(1, min(alg.blocks[i], d - used) + 1))
        V = sampling.isometry(rng, alg.blocks[i], m)
        K = np.zeros((alg.blocks[i], d), dtype=complex)
        K[:, used:used + m] = V
        kraus[i].append(K)
        used += m
    phi = cm.from_kraus(alg, d, kraus)
    return cm.adjoin(phi, sampling.unitary(rng, d))


def _generated(ctx: Context, rng, kinds, unit_kinds, commutative: bool = False,
               tries: int = 50, low: int = 1) -> tuple[CpMap, dict]:
    """Draw from ``convexity.gen``; infeasible parameter draws are redrawn."""
    for _ in range(tries):
        kind = str(rng.choice(kinds))
        alg = _algebra(ctx, rng, commutative)
        d = _hdim(ctx, rng, low)
        unit_kind = str(rng.choice(unit_kinds))
        if kind == "pure_sum":
            return _pure_sum(ctx, rng), {"kind": kind, "unit": "identity"}
        P = sampling.unit_matrix(unit_kind, d, rng)
        try:
            phi = cx.gen(kind, alg, d, P, ctx.draw_seed(rng), ctx.tol)
        except InfeasibleParams:
            continue
        return phi, {"kind": kind, "unit": unit_kind}
    raise InfeasibleParams(f"no feasible draw for kinds {kinds} after {tries} tries")


def _contractive(ctx: Context, rng, unit_kinds=("invertible", "projection", "singular", "identity", "zero")):
    kinds = ("random_cp_p", "nested_extreme", "non_extreme_mixture", "pure", "pure_state_times_P")
    return _generated(ctx, rng, kinds, unit_kinds)


ALL_KINDS = ("random_cp_p", "pure", "pure_state_times_P", "nested_extreme", "non_extreme_mixture", "pure_sum")
ALL_UNITS = ("identity", "invertible", "projection", "singular")


def _rel(A, B) -> float:
    return la.fro(np.asarray(A) - np.asarray(B)) / max(1.0, la.fro(B))


def _flagged_not_equivalent(phi: CpMap, wit: ct.DecompositionWitness, ctx: Context, seed: int) -> bool:
    flagged = wit.terms[wit.nonequiv_index][1]
    if wit.equivalence == "unitary":
        return not ex.equivalent_unitary(phi, flagged, ctx.tol, seed)[0]
    return not ex.equivalent_invertible(phi, flagged, ctx.tol, seed)[0]


def _witness_case(phi: CpMap, verdict: ct.Verdict, ctx: Context, seed: int) -> Case:
    if verdict.kind != NOT_EXTREME:
        return Case(False, None, f"expected NotExtreme, got {verdict.kind}")
    res = ct.check_witness(phi, verdict.witness, ctx.tol)
    worst = max(res.residuals.get("coefficient_identity", np.inf), res.residuals.get("recombination", np.inf))
    if not res.ok:
        return Case(False, worst, "; ".join(res.failures))
    if worst > 1e-8:
        return Case(False, worst, "witness residual above 1e-8")
    if not _flagged_not_equivalent(phi, verdict.witness, ctx, seed):
        return Case(False, worst, "flagged term is equivalent to the map")
    return Case(True, worst)


# -- linalg -------------------------------------------------------------------

def _psd_sqrt_square(ctx, rng) -> Case:
    d = int(rng.integers(1, 9))
    rank = int(rng.integers(0, d + 1))
    G = sampling.ginibre(rng, d, rank) * rng.uniform(0.1, 10.0)
    M = G @ G.conj().T
    R = la.psd_sqrt(M, ctx.tol)
    r = _rel(R @ R, M)
    herm = la.fro(R - R.conj().T)
    return Case(r <= ctx.tol.eq_tol and herm <= ctx.tol.eq_tol and la.psd_check(R, ctx.tol)[0], r)


def _p_contraction(rng, P0_root, Q0, Q1) -> np.ndarray:
    """Invertible ``X`` with ``X* P X <= P``: ``P0^{-1/2} C P0^{1/2}`` on ``ran P``, identity on ``ker P``."""
    d0 = Q0.shape[1]
    C = sampling.ginibre(rng, d0, d0)
    C = C / (np.linalg.norm(C, 2) * rng.uniform(1.0, 2.0)) if d0 else C
    X0 = np.linalg.inv(P0_root) @ C @ P0_root if d0 else C
    return Q0 @ X0 @ Q0.conj().T + Q1 @ Q1.conj().T


def _douglas_instance(ctx, rng):
    d = int(rng.integers(1, ctx.max_hdim + 1))
    rank = int(rng.integers(1, d + 1))
    P = sampling.psd(rng, d, rank, 0.1, rng.uniform(0.5, 5.0))
    Q0, Q1 = la.split_space(P, ctx.tol)
    P0_root = la.psd_sqrt(Q0.conj().T @ P @ Q0, ctx.tol)
    X = _p_contraction(rng, P0_root, Q0, Q1)
    Q = la.hermitian_part(X.conj().T @ P @ X)
    t = float(rng.uniform(0.05, 0.95))
    return P, Q, t


def _douglas_completion(ctx, rng) -> Case:
    P, Q, t = _douglas_instance(ctx, rng)
    Y = la.douglas_complete(P, Q, t, ctx.tol)
    r = la.fro(P - t * Q - Y.conj().T @ P @ Y) / max(1.0, la.fro(P))
    return Case(r <= ctx.tol.eq_tol and la.is_invertible(Y, ctx.tol), r)


def _kernel_preserving(rng, Bq: np.ndarray, Bk: np.ndarray) -> np.ndarray:
    """Random invertible ``C`` with ``C(ker B) = ker B``."""
    r, k = Bq.shape[1], Bk.shape[1]
    top = sampling.ginibre(rng, r, r) + 2 * np.eye(r)
    low = sampling.ginibre(rng, k, r)
    right = sampling.ginibre(rng, k, k) + 2 * np.eye(k)
    block = np.block([[top, np.zeros((r, k))], [low, right]])
    W = np.hstack([Bq, Bk])
    return W @ block @ W.conj().T


def _factor_instance(ctx, rng):
    d = int(rng.integers(1, ctx.max_hdim + 1))
    rank = d if rng.random() < 0.5 else int(rng.integers(1, d + 1))
    B = sampling.ginibre(rng, d, rank) @ sampling.ginibre(rng, rank, d)
    coker, ker = la.split_space(B.conj().T @ B, ctx.tol)
    C = _kernel_preserving(rng, coker, ker)
    return B, C


def _invertible_factor_round_trip(ctx, rng) -> Case:
    B, C = _factor_instance(ctx, rng)
    A = B @ C
    C2 = la.invertible_factor(A, B, ctx.tol)
    r = la.fro(A - B @ C2) / max(1.0, la.fro(A))
    return Case(r <= ctx.tol.eq_tol and la.is_invertible(C2, ctx.tol), r)


def _range_rank_invariance(ctx, rng) -> Case:
    d = int(rng.integers(1, 9))
    rank = int(rng.integers(0, d + 1))
    M = sampling.ginibre(rng, d, rank) @ sampling.ginibre(rng, rank, d)
    G = sampling.ginibre(rng, d, d) + 2 * np.eye(d)
    r1 = la.range_basis(M, ctx.tol)[1]
    r2 = la.range_basis(G @ M, ctx.tol)[1]
    return Case(r1 == r2 == rank, None, f"ranks {rank}, {r1}, {r2}")


# -- cpmap --------------------------------------------------------------------

def _choi_kraus_round_trip(ctx, rng) -> Case:
    phi = _random_cp(ctx, rng)
    back = cm.from_kraus(phi.algebra, phi.hdim, cm.kraus_of(phi, ctx.tol))
    r = cm.map_distance(back, phi)
    return Case(r <= ctx.tol.eq_tol, r)


def _apply_linear_star(ctx, rng) -> Case:
    phi = _random_cp(ctx, rng)
    a = cm.random_element(phi.algebra, rng)
    b = cm.random_element(phi.algebra, rng)
    alpha = complex(rng.standard_normal(), rng.standard_normal())
    mix = [alpha * x + y for x, y in zip(a, b)]
    lhs = cm.apply(phi, mix)
    rhs = alpha * cm.apply(phi, a) + cm.apply(phi, b)
    star = cm.apply(phi, [x.conj().T for x in a])
    r = max(_rel(lhs, rhs), _rel(cm.apply(phi, a).conj().T, star))
    return Case(r <= ctx.tol.eq_tol, r)


def _adjoin_composition(ctx, rng) -> Case:
    phi = _random_cp(ctx, rng)
    m = int(rng.integers(0, ctx.max_hdim + 1))
    k = int(rng.integers(0, ctx.max_hdim + 1))
    S = sampling.ginibre(rng, phi.hdim, m)
    T = sampling.ginibre(rng, m, k)
    r = cm.map_distance(cm.adjoin(cm.adjoin(phi, S), T), cm.adjoin(phi, S @ T))
    return Case(r <= ctx.tol.eq_tol, r)


def _hat_properties(ctx, rng) -> Case:
    alg = _algebra(ctx, rng)
    d = _hdim(ctx, rng)
    phi = cx.gen("random_cp_p", alg, d, sampling.unit_matrix("invertible", d, rng), ctx.draw_seed(rng), ctx.tol)
    h = cm.hat(phi, ctx.tol)
    back = cm.adjoin(h, la.psd_sqrt(cm.unit(phi), ctx.tol))
    r = max(cm.map_distance(back, phi), cm.map_distance(cm.hat(h, ctx.tol), h))
    return Case(r <= ctx.tol.eq_tol and cm.is_unital(h, ctx.tol), r)


def _compress_reconstruction(ctx, rng) -> Case:
    phi, _ = _generated(ctx, rng, ("random_cp_p", "nested_extreme", "pure"), ("singular", "projection", "invertible"))
    rc = cm.compress_to_range(phi, ctx.tol)
    r = cm.map_distance(rc.embed(rc.compressed), phi)
    invertible = rc.compressed.hdim == 0 or la.is_invertible(cm.unit(rc.compressed), ctx.tol)
    return Case(r <= ctx.tol.eq_tol and invertible, r)


# -- dilation -----------------------------------------------------------------

def _stinespring_identity(ctx, rng) -> Case:
    phi = _random_cp(ctx, rng)
    dil = dl.minimal_dilation(phi, ctx.tol)
    worst = 0.0
    for i, n in enumerate(phi.algebra.blocks):
        for p in range(n):
            for q in range(n):
                a = [np.zeros((m, m), dtype=complex) for m in phi.algebra.blocks]
                a[i][p, q] = 1.0
                lhs = dil.V.conj().T @ dl.representation(dil, a) @ dil.V
                worst = max(worst, la.fro(lhs - cm.apply(phi, a)))
    scale = max(1.0, max(la.fro(C) for C in phi.choi))
    return Case(worst <= ctx.tol.eq_tol * scale, worst / scale)


def _dilation_uniqueness(ctx, rng) -> Case:
    phi = _random_cp(ctx, rng)
    kraus = cm.kraus_of(phi, ctx.tol)
    redundant = []
    for ops in kraus:
        r = len(ops)
        if r == 0:
            redundant.append([])
            continue
        extra = int(rng.integers(0, 3))
        W = sampling.isometry(rng, r + extra, r)
        redundant.append([sum(W[j, s] * ops[s] for s in range(r)) for j in range(r + extra)])
    other = cm.from_kraus(phi.algebra, phi.hdim, redundant)
    m1 = dl.minimal_dilation(phi, ctx.tol).mult
    m2 = dl.minimal_dilation(other, ctx.tol).mult
    return Case(m1 == m2, cm.map_distance(other, phi), f"{m1} vs {m2}")


def _random_commutant_contraction(rng, dil: dl.Dilation) -> dl.CommutantElement:
    blocks = []
    for r in dil.mult:
        U = sampling.unitary(rng, r)
        blocks.append((U * rng.uniform(0.0, 1.0, size=r)) @ U.conj().T)
    return dl.CommutantElement(tuple(blocks))


def _rn_round_trip(ctx, rng) -> Case:
    if rng.random() < 0.5:
        phi = _random_cp(ctx, rng)
        dil = dl.minimal_dilation(phi, ctx.tol)
        psi = dl.dilated_map(dil, _random_commutant_contraction(rng, dil))
        D = dl.rn_derivative(psi, phi, ctx.tol, dil)
        r = cm.map_distance(dl.dilated_map(dil, D), psi)
        return Case(r <= ctx.tol.eq_tol, r)
    alg = _algebra(ctx, rng)
    d = _hdim(ctx, rng)
    try:
        phi = cx.gen("pure", alg, d, sampling.unit_matrix("invertible", d, rng), ctx.draw_seed(rng), ctx.tol)
    except InfeasibleParams:
        phi = cm.from_kraus(alg, d, [[sampling.ginibre(rng, alg.blocks[0], d)]] + [[] for _ in alg.blocks[1:]])
    t = float(rng.uniform(0.05, 1.0))
    D = dl.rn_derivative(t * phi, phi, ctx.tol)
    scalar = all(la.fro(M - t * np.eye(M.shape[0])) <= ctx.tol.eq_tol for M in D.blocks)
    try:
        dl.rn_derivative((1.0 + float(rng.uniform(0.1, 1.0))) * phi, phi, ctx.tol)
        rejected = False
    except NotDominated:
        rejected = True
    return Case(scalar and rejected, None, f"scalar {scalar}, over-scaled rejected {rejected}")


def _purity_two_routes(ctx, rng) -> Case:
    if rng.random() < 0.5:
        alg = _algebra(ctx, rng)
        d = _hdim(ctx, rng)
        i = int(rng.integers(len(alg)))
        kraus = [[] for _ in alg.blocks]
        kraus[i] = [sampling.ginibre(rng, alg.blocks[i], d)]
        phi = cm.from_kraus(alg, d, kraus)
    else:
        phi = _random_cp(ctx, rng)
    a = dl.is_pure(phi, ctx.tol)
    b = len(dl.commutant_basis(dl.minimal_dilation(phi, ctx.tol))) == 1
    return Case(a == b, None, f"is_pure {a}, trivial commutant {b}")


# -- extremal -----------------------------------------------------------------

def _verdict_soundness(ctx, rng) -> Case:
    phi, info = _generated(ctx, rng, ALL_KINDS, ALL_UNITS)
    seed = ctx.draw_seed(rng)
    model, verdict = ex.decide(phi, "auto", ctx.tol, seed)
    if verdict.kind == INCONCLUSIVE:
        return Case(True, None, "inconclusive")
    res = ct.check_verdict(phi, verdict, ctx.tol)
    if not res.ok:
        return Case(False, None, f"{info['kind']}/{model}: " + "; ".join(res.failures))
    if verdict.kind == NOT_EXTREME and not _flagged_not_equivalent(phi, verdict.witness, ctx, seed):
        return Case(False, None, "flagged term is equivalent")
    return Case(True, res.residuals.get("reconstruction", res.residuals.get("recombination")))


def _range_compression_coherence(ctx, rng) -> Case:
    phi, info = _generated(ctx, rng, ALL_KINDS[:-1], ("singular", "projection"))
    seed = ctx.draw_seed(rng)
    full = ex.cp_p_cstar_extreme(phi, ctx.tol, seed).kind
    rc = cm.compress_to_range(phi, ctx.tol)
    small = ex.cp_p_cstar_extreme(rc.compressed, ctx.tol, seed).kind
    return Case(full == small and full != INCONCLUSIVE, None, f"{info['kind']}: {full} vs {small}")


def _equivalence_relation(ctx, rng) -> Case:
    phi, _ = _generated(ctx, rng, ALL_KINDS, ("identity", "invertible"))
    d = phi.hdim
    U, W = sampling.unitary(rng, d), sampling.unitary(rng, d)
    psi = cm.adjoin(phi, U)
    chi = cm.adjoin(psi, W)
    seed = ctx.draw_seed(rng)
    refl, _ = ex.equivalent_unitary(phi, phi, ctx.tol, seed)
    fwd, X = ex.equivalent_unitary(phi, psi, ctx.tol, seed)
    back, _ = ex.equivalent_unitary(psi, phi, ctx.tol, seed)
    trans, _ = ex.equivalent_unitary(phi, chi, ctx.tol, seed)
    r = cm.map_distance(cm.adjoin(psi, X.conj().T), phi) if fwd else np.inf
    ok = refl and fwd and back and trans and r <= ctx.tol.eq_tol
    return Case(ok, r, f"reflexive {refl}, forward {fwd}, backward {back}, transitive {trans}")


# -- convexity ----------------------------------------------------------------

def _norm_persistence(ctx, rng) -> Case:
    unit_kind = str(rng.choice(["invertible-norm1", "projection", "identity"]))
    phi, info = _generated(ctx, rng, ("random_cp_p", "non_extreme_mixture", "pure_sum"), (unit_kind,), low=2)
    verdict = ex.ccp_cstar_extreme(phi, ctx.tol, ctx.draw_seed(rng))
    if verdict.kind != NOT_EXTREME:
        return Case(True, None, f"no decomposition ({verdict.kind})")
    norms = [np.linalg.norm(cm.unit(term), 2) for _, term in verdict.witness.terms]
    r = max(abs(n - 1.0) for n in norms)
    return Case(r <= ctx.tol.eq_tol, r, f"term norms {norms}")


def _ccpx_closure(ctx, rng) -> Case:
    alg = _algebra(ctx, rng)
    d = _hdim(ctx, rng)
    maps = [cx.gen("random_cp_p", alg, d, sampling.unit_matrix("invertible", d, rng), ctx.draw_seed(rng), ctx.tol)
            for _ in range(2)]
    T1 = sampling.ginibre(rng, d, d)
    T1 = T1 / (np.linalg.norm(T1, 2) * rng.uniform(1.05, 3.0))
    T2 = la.psd_sqrt(np.eye(d) - T1.conj().T @ T1, ctx.tol)
    spec = cx.CombinationSpec(np.eye(d, dtype=complex), [(T1, maps[0]), (T2, maps[1])])
    out = cx.combine(spec, ctx.tol)
    return Case(la.is_invertible(cm.unit(out), ctx.tol), None)


# -- cli ----------------------------------------------------------------------

def _round_trip_object(ctx, rng, i: int):
    which = i % 5
    phi, _ = _generated(ctx, rng, ALL_KINDS, ALL_UNITS)
    if which == 0:
        return "map", phi, sz.map_to_json, sz.map_from_json
    if which == 1:
        _, verdict = ex.decide(phi, "auto", ctx.tol, ctx.draw_seed(rng))
        return "verdict", verdict, sz.verdict_to_json, sz.verdict_from_json
    if which == 2:
        return "dilation", dl.minimal_dilation(phi, ctx.tol), sz.dilation_to_json, sz.dilation_from_json
    if which == 3:
        dil = dl.minimal_dilation(phi, ctx.tol)
        return "commutant", _random_commutant_contraction(rng, dil), sz.commutant_to_json, sz.commutant_from_json
    if cm.is_contractive(phi, ctx.tol):
        return "combination", cx.km_reduce_ccp(phi, ctx.tol), sz.combination_to_json, sz.combination_from_json
    return "map", phi, sz.map_to_json, sz.map_from_json


def _serialization_round_trip(ctx, rng) -> Case:
    label, obj, emit, parse = _round_trip_object(ctx, rng, int(rng.integers(5)))
    text = sz.dumps(emit(obj))
    again = sz.dumps(emit(parse(sz.loads(text))))
    return Case(text == again, None, f"{label} changed under round trip")


def _check_path(ctx, rng) -> Case:
    phi, info = _generated(ctx, rng, ALL_KINDS, ALL_UNITS)
    model, verdict = ex.decide(phi, "auto", ctx.tol, ctx.draw_seed(rng))
    if verdict.kind == INCONCLUSIVE:
        return Case(True, None, "inconclusive")
    text = sz.dumps(sz.verdict_to_json(verdict))
    parsed_map = sz.map_from_json(sz.loads(sz.dumps(sz.map_to_json(phi))))
    res = ct.check_verdict(parsed_map, sz.verdict_from_json(sz.loads(text)), ctx.tol)
    return Case(res.ok, None, f"{info['kind']}/{model}: " + "; ".join(res.failures))


def _determinism(ctx, rng) -> Case:
    phi, _ = _generated(ctx, rng, ALL_KINDS, ALL_UNITS)
    seed = ctx.draw_seed(rng)
    texts = []
    for _ in range(2):
        model, verdict = ex.decide(phi, "auto", ctx.tol, seed)
        rep = sz.report("extreme", dict(sz.verdict_to_json(verdict), model=model), ctx.tol, seed)
        texts.append(sz.dumps(sz.strip_timestamp(rep)))
    return Case(texts[0] == texts[1], None)


# -- acceptance ---------------------------------------------------------------

def _a01_hat_reduction(ctx, rng) -> Case:
    phi, info = _generated(ctx, rng, ("random_cp_p", "nested_extreme", "non_extreme_mixture", "pure_state_times_P"),
                           ("invertible",))
    seed = ctx.draw_seed(rng)
    a = ex.cp_p_cstar_extreme(phi, ctx.tol, seed).kind
    b = ex.ucp_cstar_extreme(cm.hat(phi, ctx.tol), ctx.tol, seed).kind
    return Case(a == b and a != INCONCLUSIVE, None, f"{info['kind']}: {a} vs {b}")


def _nonzero_unit(ctx, rng, d):
    return sampling.unit_matrix(str(rng.choice(["identity", "invertible", "projection", "singular"])), d, rng)


def _a02_pure_extreme(ctx, rng) -> Case:
    for _ in range(50):
        alg = _algebra(ctx, rng)
        d = _hdim(ctx, rng)
        P = _nonzero_unit(ctx, rng, d)
        try:
            phi = cx.gen("pure", alg, d, P, ctx.draw_seed(rng), ctx.tol)
            break
        except InfeasibleParams:
            continue
    verdict = ex.cp_p_cstar_extreme(phi, ctx.tol, ctx.draw_seed(rng))
    return Case(verdict.kind == EXTREME, None, verdict.kind)


def _a03_pure_state_times_p(ctx, rng) -> Case:
    alg = _algebra(ctx, rng)
    d = _hdim(ctx, rng)
    P = sampling.psd(rng, d, int(rng.integers(1, d + 1)))
    phi = cx.gen("pure_state_times_P", alg, d, P, ctx.draw_seed(rng), ctx.tol)
    kind = ex.cp_p_cstar_extreme(phi, ctx.tol, ctx.draw_seed(rng)).kind
    lin, _ = ex.linear_extreme(phi, ctx.tol)
    return Case(kind == EXTREME and lin, None, f"{kind}, linear {lin}")


def _a04_commutative_law(ctx, rng) -> Case:
    phi, info = _generated(ctx, rng, ("homomorphism", "random_cp_p", "nested_extreme", "non_extreme_mixture"),
                           ("projection", "identity"), commutative=True)
    kind = ex.ccp_cstar_extreme(phi, ctx.tol, ctx.draw_seed(rng)).kind
    hom = cm.is_homomorphism(phi, ctx.tol)
    form = ex.commutative_form(phi, ctx.tol) is not None
    ok = kind != INCONCLUSIVE and (kind == EXTREME) == hom == form
    return Case(ok, None, f"{info['kind']}: {kind}, homomorphism {hom}, form {form}")


def _a05_inclusion(ctx, rng) -> Case:
    phi, info = _generated(ctx, rng, ALL_KINDS, ALL_UNITS)
    kind = ex.cp_p_cstar_extreme(phi, ctx.tol, ctx.draw_seed(rng)).kind
    if kind != EXTREME:
        return Case(True, None, kind)
    lin, _ = ex.linear_extreme(phi, ctx.tol)
    return Case(lin, None, f"{info['kind']}: extreme but not linearly extreme")


def _both(first: Case, second: Case) -> Case:
    """Conjunction of two sub-cases drawn for the same instance."""
    residuals = [r for r in (first.residual, second.residual) if r is not None]
    notes = "; ".join(c.note for c in (first, second) if c.note and not c.ok)
    return Case(first.ok and second.ok, max(residuals) if residuals else None, notes)


def _a06_nested(ctx, rng, unit_kinds) -> Case:
    phi, info = _generated(ctx, rng, ("nested_extreme",), unit_kinds)
    model, verdict = ex.decide(phi, "auto", ctx.tol, ctx.draw_seed(rng))
    if verdict.kind != EXTREME:
        return Case(False, None, f"nested_extreme rejected under {model}: {verdict.kind}")
    res = ct.check_structure(phi, verdict.certificate, ctx.tol)
    return Case(res.ok, res.residuals.get("reconstruction"), "; ".join(res.failures))


def _a06_generator_round_trip(ctx, rng) -> Case:
    """One nested_extreme and one non_extreme_mixture generation per instance."""
    unit_kinds = ("identity", "invertible", "projection", "singular")
    accepted = _a06_nested(ctx, rng, unit_kinds)
    phi, info = _generated(ctx, rng, ("non_extreme_mixture",), unit_kinds)
    seed = ctx.draw_seed(rng)
    model, verdict = ex.decide(phi, "auto", ctx.tol, seed)
    return _both(accepted, _witness_case(phi, verdict, ctx, seed))


def _a07_radon_nikodym(ctx, rng) -> Case:
    phi = _random_cp(ctx, rng)
    dil = dl.minimal_dilation(phi, ctx.tol)
    psi = dl.dilated_map(dil, _random_commutant_contraction(rng, dil))
    D = dl.rn_derivative(psi, phi, ctx.tol, dil)
    r = cm.map_distance(dl.dilated_map(dil, D), psi)
    full = D.realize(dil)
    positive = la.psd_check(full, ctx.tol)[0] and la.psd_check(np.eye(full.shape[0]) - full, ctx.tol)[0]
    a = cm.random_element(phi.algebra, rng)
    pi_a = dl.representation(dil, a)
    commutes = la.fro(full @ pi_a - pi_a @ full) <= ctx.tol.eq_tol * max(1.0, la.fro(pi_a))
    return Case(r <= 1e-8 and positive and commutes, r, f"psd contraction {positive}, commutes {commutes}")


def _a08_factorizations(ctx, rng) -> Case:
    which = int(rng.integers(3))
    cut = 1e-9
    if which == 0:
        P, Q, t = _douglas_instance(ctx, rng)
        Y = la.douglas_complete(P, Q, t, ctx.tol)
        scale = max(1.0, la.fro(P))
        r = la.fro(P - t * Q - Y.conj().T @ P @ Y) / scale
        return Case(r <= cut and la.is_invertible(Y, ctx.tol), r, "douglas_complete")
    if which == 1:
        B, C = _factor_instance(ctx, rng)
        A = B @ C
        C2 = la.invertible_factor(A, B, ctx.tol)
        r = la.fro(A - B @ C2) / max(1.0, la.fro(A))
        return Case(r <= cut and la.is_invertible(C2, ctx.tol), r, "invertible_factor")
    d = int(rng.integers(1, ctx.max_hdim + 1))
    rank = int(rng.integers(1, d + 1))
    P = sampling.psd(rng, d, rank)
    Q0, Q1 = la.split_space(P, ctx.tol)
    T = _p_contraction(rng, la.psd_sqrt(Q0.conj().T @ P @ Q0, ctx.tol), Q0, Q1)
    ok, Y = la.range_conjugacy_check(T, P, ctx.tol)
    if not ok:
        return Case(False, None, "range_conjugacy_check rejected a range-preserving T")
    root = la.psd_sqrt(P, ctx.tol)
    lhs = T.conj().T @ root
    r = la.fro(lhs - root @ Y) / max(1.0, la.fro(lhs))
    return Case(r <= cut and la.is_invertible(Y, ctx.tol), r, "range_conjugacy_check")


def _is_projection_spectrum(P: np.ndarray, tol: Tolerances) -> tuple[bool, np.ndarray]:
    w, U = np.linalg.eigh(la.hermitian_part(P))
    near = np.minimum(np.abs(w), np.abs(w - 1.0))
    return bool(np.all(near <= tol.spectral)), (w, U)


def _direct_ccp_verdict(phi: CpMap, ctx: Context, seed: int) -> str:
    """Second route: spectral projection test, explicit witness, or unital compression."""
    P = la.hermitian_part(cm.unit(phi))
    d = phi.hdim
    projection, (w, U) = _is_projection_spectrum(P, ctx.tol)
    if not projection:
        # A = P/2 + (I-P)/4 gives terms Ad_{A^{-1/2}}(Phi/2) whose units have a different spectrum
        A = 0.5 * P + 0.25 * (np.eye(d) - P)
        roots = [la.psd_sqrt(A, ctx.tol), la.psd_sqrt(np.eye(d) - A, ctx.tol)]
        terms = [(R, cm.adjoin(0.5 * phi, np.linalg.inv(R))) for R in roots]
        evidence = ct.equivalence_obstruction(phi, terms[0][1], "unitary", ctx.tol) or {"kind": "none"}
        wit = ct.DecompositionWitness(np.eye(d, dtype=complex), terms, 0, "unitary", evidence, "ccp")
        return NOT_EXTREME if ct.check_witness(phi, wit, ctx.tol).ok else INCONCLUSIVE
    Q0 = U[:, w > 0.5]
    if Q0.shape[1] == 0:
        return EXTREME
    return ex.ucp_cstar_extreme(cm.adjoin(phi, Q0), ctx.tol, seed).kind


def _a09_ccp_two_routes(ctx, rng) -> Case:
    if rng.random() < 0.25:
        phi = _random_cp(ctx, rng)
        phi = (float(rng.uniform(0.3, 1.0)) / np.linalg.norm(cm.unit(phi), 2)) * phi
        info = {"kind": "scaled random"}
    else:
        phi, info = _contractive(ctx, rng)
    seed = ctx.draw_seed(rng)
    a = ex.ccp_cstar_extreme(phi, ctx.tol, seed).kind
    b = _direct_ccp_verdict(phi, ctx, seed)
    return Case(a == b and a != INCONCLUSIVE, None, f"{info['kind']}: {a} vs {b}")


def _a10_ucp_and_collapse(ctx, rng) -> Case:
    """One unital map and one map with invertible non-identity norm-one unit per instance."""
    kinds = ("random_cp_p", "nested_extreme", "non_extreme_mixture", "pure_state_times_P", "pure")
    seed = ctx.draw_seed(rng)
    phi, info = _generated(ctx, rng, kinds + ("pure_sum",), ("identity",))
    a = ex.ccp_cstar_extreme(phi, ctx.tol, seed).kind
    b = ex.ucp_cstar_extreme(phi, ctx.tol, seed).kind
    agree = Case(a == b and a != INCONCLUSIVE, None, f"unital {info['kind']}: {a} vs {b}")
    phi, info = _generated(ctx, rng, kinds, ("invertible-norm1",), low=2)
    verdict = ex.ccp_cstar_extreme(phi, ctx.tol, seed)
    if verdict.kind != NOT_EXTREME:
        return _both(agree, Case(False, None, f"norm-one {info['kind']}: {verdict.kind}"))
    res = ct.check_witness(phi, verdict.witness, ctx.tol)
    return _both(agree, Case(res.ok, res.residuals.get("recombination"), "; ".join(res.failures)))


def _a11_km_reduction(ctx, rng) -> Case:
    phi, info = _contractive(ctx, rng)
    spec = cx.km_reduce_ccp(phi, ctx.tol)
    v = cx.validate(spec, ctx.tol, "ccp")
    units = [cm.classify_unit(cm.unit(term), ctx.tol) for _, term in spec.terms]
    unit_ok = all(u.is_projection for u in units)
    r = cm.map_distance(cx.combine(spec, ctx.tol), phi)
    ok = v.valid and v.residual <= 1e-8 and unit_ok and r <= 1e-8
    return Case(ok, max(r, v.residual), f"{info['kind']}: valid {v.valid}, units {[u.tag for u in units]}")


def _a12_oracle(ctx, rng) -> Case:
    alg = cm.algebra(2) if rng.random() < 0.5 else cm.algebra(1, 1)
    kinds = ["nested_extreme", "non_extreme_mixture", "random_cp_p", "pure_state_times_P", "pure_sum"]
    if alg.commutative:
        kinds.append("homomorphism")
    kind = str(rng.choice(kinds))
    eye = np.eye(2, dtype=complex)
    if kind == "pure_sum":
        ops = [[] for _ in alg.blocks]
        for col in range(2):
            i = int(rng.integers(len(alg)))
            K = np.zeros((alg.blocks[i], 2), dtype=complex)
            K[:, col] = sampling.isometry(rng, alg.blocks[i], 1)[:, 0]
            ops[i].append(K)
        phi = cm.adjoin(cm.from_kraus(alg, 2, ops), sampling.unitary(rng, 2))
    else:
        try:
            phi = cx.gen(kind, alg, 2, eye, ctx.draw_seed(rng), ctx.tol)
        except InfeasibleParams:
            phi = cx.gen("nested_extreme", alg, 2, eye, ctx.draw_seed(rng), ctx.tol)
    seed = ctx.draw_seed(rng)
    kind_found = ex.ucp_cstar_extreme(phi, ctx.tol, seed).kind
    found = oracle.search(list(phi.choi), list(alg.blocks), 2, seed)
    expected = EXTREME if found.extreme else NOT_EXTREME
    return Case(kind_found == expected, found.gap, f"{kind} on {alg.blocks}: decider {kind_found}, oracle {expected}")


PROPERTIES: list[Property] = [
    Property("psd_sqrt_square", "linalg", 1000, _psd_sqrt_square, "psd_sqrt(M)^2 = M"),
    Property("douglas_completion", "linalg", 500, _douglas_completion, "Y invertible and P - tQ = Y*PY"),
    Property("invertible_factor_round_trip", "linalg", 500, _invertible_factor_round_trip, "B C' = B C"),
    Property("range_rank_invariance", "linalg", 500, _range_rank_invariance, "rank(GM) = rank(M)"),
    Property("choi_kraus_round_trip", "cpmap", 500, _choi_kraus_round_trip, "from_kraus(kraus_of(Phi)) = Phi"),
    Property("apply_linear_star", "cpmap", 200, _apply_linear_star, "apply is linear and *-preserving"),
    Property("adjoin_composition", "cpmap", 200, _adjoin_composition, "Ad_T Ad_S = Ad_{ST}"),
    Property("hat_renormalization", "cpmap", 200, _hat_properties, "Ad_{P^1/2} hat = Phi, hat idempotent"),
    Property("compress_reconstruction", "cpmap", 200, _compress_reconstruction, "diag(Phi0, 0) = Phi"),
    Property("stinespring_identity", "dilation", 500, _stinespring_identity, "V* pi(E) V = Phi(E)"),
    Property("dilation_uniqueness", "dilation", 200, _dilation_uniqueness, "multiplicities are basis free"),
    Property("rn_round_trip", "dilation", 200, _rn_round_trip, "Radon-Nikodym reconstruction"),
    Property("purity_two_routes", "dilation", 200, _purity_two_routes, "is_pure iff trivial commutant"),
    Property("verdict_soundness", "extremal", 200, _verdict_soundness, "every payload re-checks"),
    Property("range_compression_coherence", "extremal", 200, _range_compression_coherence, "verdict(Phi) = verdict(Phi0)"),
    Property("equivalence_relation", "extremal", 100, _equivalence_relation, "unitary equivalence is an equivalence"),
    Property("norm_persistence", "convexity", 200, _norm_persistence, "terms of norm-one maps keep norm one"),
    Property("ccpx_closure", "convexity", 200, _ccpx_closure, "combinations keep invertible units"),
    Property("serialization_round_trip", "cli", 500, _serialization_round_trip, "emit(parse(emit(x))) = emit(x)"),
    Property("certificate_check_path", "cli", 100, _check_path, "serialized reports re-check"),
    Property("determinism", "cli", 50, _determinism, "same seed, same report"),
    Property("A01_hat_reduction", "acceptance", 200, _a01_hat_reduction, "cp-p verdict = ucp verdict of hat"),
    Property("A02_pure_extreme", "acceptance", 200, _a02_pure_extreme, "pure maps are extreme"),
    Property("A03_pure_state_times_P", "acceptance", 100, _a03_pure_state_times_p, "psi(.)P extreme and linearly extreme"),
    Property("A04_commutative_law", "acceptance", 200, _a04_commutative_law, "extreme iff homomorphism"),
    Property("A05_linear_inclusion", "acceptance", 500, _a05_inclusion, "C*-extreme implies linearly extreme"),
    Property("A06_generator_round_trip", "acceptance", 200, _a06_generator_round_trip, "generators and decider agree"),
    Property("A07_radon_nikodym", "acceptance", 200, _a07_radon_nikodym, "D recovered in the commutant"),
    Property("A08_factorizations", "acceptance", 500, _a08_factorizations, "Douglas and Fillmore factorizations"),
    Property("A09_ccp_two_routes", "acceptance", 200, _a09_ccp_two_routes, "two ccp decision routes agree"),
    Property("A10_ucp_and_collapse", "acceptance", 100, _a10_ucp_and_collapse, "ccp = ucp on unital maps; norm-one collapse"),
    Property("A11_km_reduction", "acceptance", 200, _a11_km_reduction, "km_reduce_ccp validates"),
    Property("A12_bruteforce_oracle", "acceptance", 50, _a12_oracle, "agreement with exhaustive search"),
]


def property_names() -> list[str]:
    return [p.name for p in PROPERTIES]


def instance_rng(seed: int, name: str, i: int) -> np.random.Generator:
    return np.random.default_rng([seed, zlib.crc32(name.encode()), i])


def run_property(prop: Property, ctx: Context) -> PropertyResult:
    cases = prop.count if ctx.count is None else ctx.count
    out = PropertyResult(prop.name, prop.module, cases)
    start = time.perf_counter()
    for i in range(cases):
        rng = instance_rng(ctx.seed, prop.name, i)
        try:
            case = prop.check(ctx, rng)
        except (CpextError, np.linalg.LinAlgError) as exc:
            case = Case(False, None, f"{type(exc).__name__}: {exc}")
        out.residuals.append(case.residual)
        if case.ok:
            out.passed += 1
            if case.note in ("inconclusive", "no decomposition (Extreme)"):
                out.notes[case.note] = out.notes.get(case.note, 0) + 1
        else:
            out.failures.append({"instance": i, "note": case.note})
    out.seconds = time.perf_counter() - start
    return out


def run(ctx: Context, only: list[str] | None = None,
        progress: Callable[[PropertyResult], None] | None = None) -> tuple[dict, list[PropertyResult]]:
    """Run the selected properties in registry order; returns the JSON summary and the raw results."""
    selected = [p for p in PROPERTIES if not only or p.name in only or p.module in only]
    results = []
    if ctx.count != 0:
        for prop in selected:
            res = run_property(prop, ctx)
            results.append(res)
            if progress is not None:
                progress(res)
    summary = {
        "seed": ctx.seed,
        "count": ctx.count,
        "dims": {"max_block": ctx.max_block, "max_hdim": ctx.max_hdim},
        "tolerances": ctx.tol.as_dict(),
        "passed": all(r.ok for r in results),
        "properties": [r.as_dict() for r in results],
    }
    return summary, results
