"""Minimal Stinespring dilations, the representation commutant and
Radon-Nikodym derivatives.

For a CP map with Choi ranks ``r_i`` the minimal dilation space is
``K = sum_i C^{n_i} (x) C^{r_i}`` with ``pi(a) = sum_i a_i (x) I_{r_i}``.  The
isometry-like ``V: C^d -> K`` stacks the Kraus operators, so that block ``i``
of ``V`` reshaped to ``(n_i, r_i, d)`` holds ``K_{i,s}[p, x]`` at ``[p, s, x]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import block_diag

from . import cpmap as cm
from . import linalg as la
from .cpmap import CpMap
from .errors import NotCP, NotDominated, NotPure, ReconstructionFailure, ZeroMap
from .linalg import DEFAULT_TOL, Tolerances


@dataclass(frozen=True)
class Dilation:
    algebra: cm.AlgebraSpec
    hdim: int
    mult: tuple[int, ...]
    V: np.ndarray = field(repr=False)
    kraus: tuple[tuple[np.ndarray, ...], ...] = field(repr=False)

    @property
    def kdim(self) -> int:
        return sum(n * r for n, r in zip(self.algebra.blocks, self.mult))

    def block_offsets(self) -> list[int]:
        offsets = [0]
        for n, r in zip(self.algebra.blocks, self.mult):
            offsets.append(offsets[-1] + n * r)
        return offsets

    def factor(self, i: int) -> np.ndarray:
        """Columns ``conj(vec K_{i,s})``: the Choi block ``i`` equals ``U U*``."""
        n, d = self.algebra.blocks[i], self.hdim
        ops = self.kraus[i]
        if not ops:
            return np.zeros((n * d, 0), dtype=complex)
        return np.column_stack([K.conj().reshape(-1) for K in ops])


@dataclass(frozen=True)
class CommutantElement:
    """``sum_i I_{n_i} (x) M_i`` in the commutant of ``pi``."""

    blocks: tuple[np.ndarray, ...]

    def realize(self, dil: Dilation) -> np.ndarray:
        mats = [np.kron(np.eye(n), M) for n, M in zip(dil.algebra.blocks, self.blocks)]
        return block_diag(*mats) if mats else np.zeros((0, 0), dtype=complex)

    def __add__(self, other: "CommutantElement") -> "CommutantElement":
        return CommutantElement(tuple(a + b for a, b in zip(self.blocks, other.blocks)))

    def __mul__(self, scalar) -> "CommutantElement":
        return CommutantElement(tuple(scalar * M for M in self.blocks))

    __rmul__ = __mul__


def minimal_dilation(phi: CpMap, tol: Tolerances = DEFAULT_TOL) -> Dilation:
    """Minimal Stinespring triple built from the eigen-factorized Choi blocks."""
    kraus = cm.kraus_of(phi, tol)
    mult = tuple(len(ops) for ops in kraus)
    parts = []
    for n, ops in zip(phi.algebra.blocks, kraus):
        if ops:
            parts.append(np.stack(ops, axis=1).reshape(n * len(ops), phi.hdim))
    V = np.vstack(parts) if parts else np.zeros((0, phi.hdim), dtype=complex)
    return Dilation(phi.algebra, phi.hdim, mult, V, tuple(tuple(ops) for ops in kraus))


def representation(dil: Dilation, a) -> np.ndarray:
    """``pi(a)`` on the dilation space."""
    mats = [np.kron(np.asarray(ai), np.eye(r)) for ai, r in zip(a, dil.mult)]
    return block_diag(*mats) if mats else np.zeros((0, 0), dtype=complex)


def commutant_basis(dil: Dilation) -> list[CommutantElement]:
    """Trace-orthonormal basis of ``pi(A)'``: ``sum r_i^2`` elements."""
    basis = []
    for i, (n, r) in enumerate(zip(dil.algebra.blocks, dil.mult)):
        for s in range(r):
            for t in range(r):
                blocks = [np.zeros((rj, rj), dtype=complex) for rj in dil.mult]
                blocks[i][s, t] = 1.0 / np.sqrt(n)
                basis.append(CommutantElement(tuple(blocks)))
    return basis


def identity_element(dil: Dilation) -> CommutantElement:
    return CommutantElement(tuple(np.eye(r, dtype=complex) for r in dil.mult))


def dilated_map(dil: Dilation, D: CommutantElement) -> CpMap:
    """``a -> V* D pi(a) V`` for ``D`` in the commutant."""
    choi = []
    for i in range(len(dil.algebra)):
        U = dil.factor(i)
        choi.append(U @ D.blocks[i] @ U.conj().T)
    return CpMap(dil.algebra, dil.hdim, tuple(choi))


def is_pure(phi: CpMap, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Exactly one nonzero Choi block, of rank one."""
    ranks = cm.choi_ranks(phi, tol)
    if sum(ranks) == 0:
        raise ZeroMap("purity is undefined for the zero map")
    return sum(ranks) == 1


def rn_derivative(psi: CpMap, phi: CpMap, tol: Tolerances = DEFAULT_TOL,
                  dil: Dilation | None = None) -> CommutantElement:
    """Commutant element ``D`` with ``Psi = V* D pi(.) V`` for ``Psi <=_cp Phi``.

    Each block solves ``U M U* = C_Psi`` in the least-squares sense, where
    ``U`` has full column rank, and the solution is accepted only after the
    reconstruction, positivity and contraction checks pass.
    """
    if not cm.cp_order(psi, phi, tol):
        raise NotDominated("Psi is not dominated by Phi")
    if not cm.is_cp(psi, tol):
        raise NotCP("Psi is not completely positive")
    dil = dil or minimal_dilation(phi, tol)
    blocks = []
    for i, C_psi in enumerate(psi.choi):
        U = dil.factor(i)
        U_pinv = np.linalg.pinv(U) if U.shape[1] else U.conj().T
        M = la.hermitian_part(U_pinv @ C_psi @ U_pinv.conj().T)
        residual = la.fro(U @ M @ U.conj().T - C_psi)
        if residual > tol.eq_tol * max(1.0, la.fro(C_psi), la.fro(phi.choi[i])):
            raise ReconstructionFailure(f"block {i} residual {residual:.3e}")
        r = M.shape[0]
        if r and not (la.psd_check(M, tol)[0] and la.psd_check(np.eye(r) - M, tol)[0]):
            raise ReconstructionFailure(f"block {i} derivative is not a positive contraction")
        blocks.append(M)
    return CommutantElement(tuple(blocks))


def dilation_range(dil: Dilation, block: int, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of ``ran K`` in ``C^{n_i}`` for the single Kraus operator of a pure map."""
    if sum(dil.mult) != 1 or dil.mult[block] != 1:
        raise NotPure(f"multiplicities {dil.mult} do not describe a pure map on block {block}")
    Q, _ = la.range_basis(dil.kraus[block][0], tol)
    return Q
