"""Finite-dimensional C*-algebras and completely positive maps.

An algebra is a block direct sum ``M_{n_1} + ... + M_{n_k}``.  A linear map
``Phi`` from it into ``d x d`` matrices is stored through one Choi block per
algebra block: block ``i`` is ``(n_i d) x (n_i d)`` and its ``(p, q)`` sub-block
of size ``d x d`` equals ``Phi`` evaluated at the matrix unit ``E_pq`` of block
``i``.  With this convention a Kraus operator ``K`` (``n_i x d``, acting as
``a -> K* a K``) contributes ``v v*`` to the Choi block, where ``v`` is the
row-major flattening of ``conj(K)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from . import linalg as la
from .errors import (
    AlgebraMismatch,
    DimMismatch,
    NotCP,
    OffDiagonalLeak,
    UnitNotInvertible,
)
from .linalg import DEFAULT_TOL, Tolerances


@dataclass(frozen=True)
class AlgebraSpec:
    """Block sizes of ``M_{n_1} + ... + M_{n_k}``."""

    blocks: tuple[int, ...]

    def __post_init__(self):
        blocks = tuple(int(n) for n in self.blocks)
        if not blocks or any(n < 1 for n in blocks):
            raise DimMismatch(f"block sizes must be positive, got {self.blocks!r}")
        object.__setattr__(self, "blocks", blocks)

    @property
    def commutative(self) -> bool:
        return all(n == 1 for n in self.blocks)

    @property
    def dim(self) -> int:
        return sum(n * n for n in self.blocks)

    def __len__(self) -> int:
        return len(self.blocks)

    def matrix_units(self) -> Iterator[tuple[int, int, int]]:
        for i, n in enumerate(self.blocks):
            for p in range(n):
                for q in range(n):
                    yield i, p, q

    def identity(self) -> list[np.ndarray]:
        return [np.eye(n, dtype=complex) for n in self.blocks]

    def unit_element(self, block: int, p: int, q: int) -> list[np.ndarray]:
        a = [np.zeros((n, n), dtype=complex) for n in self.blocks]
        a[block][p, q] = 1.0
        return a


def algebra(*blocks: int) -> AlgebraSpec:
    return AlgebraSpec(tuple(blocks))


@dataclass(frozen=True)
class CpMap:
    """Linear map ``A -> M_d`` stored as per-block Choi matrices.

    The name reflects intended use; complete positivity itself is checked by
    :func:`verify`, not on construction.
    """

    algebra: AlgebraSpec
    hdim: int
    choi: tuple[np.ndarray, ...] = field(repr=False)

    def __post_init__(self):
        if self.hdim < 0:
            raise DimMismatch("hdim must be non-negative")
        choi = tuple(np.asarray(C, dtype=complex) for C in self.choi)
        if len(choi) != len(self.algebra):
            raise DimMismatch(f"{len(choi)} Choi blocks for {len(self.algebra)} algebra blocks")
        for n, C in zip(self.algebra.blocks, choi):
            if C.shape != (n * self.hdim, n * self.hdim):
                raise DimMismatch(f"Choi block shape {C.shape}, expected {(n * self.hdim,) * 2}")
            if not np.all(np.isfinite(C)):
                raise DimMismatch("Choi block has non-finite entries")
        object.__setattr__(self, "choi", choi)

    def block4(self, i: int) -> np.ndarray:
        """Choi block ``i`` as an array indexed ``[p, x, q, y]``."""
        n, d = self.algebra.blocks[i], self.hdim
        return self.choi[i].reshape(n, d, n, d)

    def at_unit(self, i: int, p: int, q: int) -> np.ndarray:
        """``Phi(E_pq)`` for the matrix unit in block ``i``."""
        return self.block4(i)[p, :, q, :]

    def unit(self) -> np.ndarray:
        return unit(self)

    def __add__(self, other: "CpMap") -> "CpMap":
        _same_shape(self, other)
        return CpMap(self.algebra, self.hdim, tuple(a + b for a, b in zip(self.choi, other.choi)))

    def __sub__(self, other: "CpMap") -> "CpMap":
        _same_shape(self, other)
        return CpMap(self.algebra, self.hdim, tuple(a - b for a, b in zip(self.choi, other.choi)))

    def __mul__(self, scalar: float) -> "CpMap":
        return CpMap(self.algebra, self.hdim, tuple(scalar * C for C in self.choi))

    __rmul__ = __mul__


def _same_shape(phi: CpMap, psi: CpMap) -> None:
    if phi.algebra != psi.algebra:
        raise AlgebraMismatch(f"{phi.algebra.blocks} vs {psi.algebra.blocks}")
    if phi.hdim != psi.hdim:
        raise DimMismatch(f"hdim {phi.hdim} vs {psi.hdim}")


def _check_element(alg: AlgebraSpec, a: Sequence[np.ndarray]) -> list[np.ndarray]:
    if len(a) != len(alg):
        raise DimMismatch(f"element has {len(a)} blocks, algebra has {len(alg)}")
    out = []
    for n, block in zip(alg.blocks, a):
        block = np.asarray(block, dtype=complex)
        if block.shape != (n, n):
            raise DimMismatch(f"element block shape {block.shape}, expected {(n, n)}")
        out.append(block)
    return out


def from_choi(alg: AlgebraSpec, hdim: int, choi: Sequence) -> CpMap:
    return CpMap(alg, int(hdim), tuple(np.asarray(C, dtype=complex) for C in choi))


def zero_map(alg: AlgebraSpec, hdim: int) -> CpMap:
    return CpMap(alg, hdim, tuple(np.zeros((n * hdim, n * hdim), dtype=complex) for n in alg.blocks))


def identity_map(n: int) -> CpMap:
    """The identity representation of ``M_n`` on ``C^n``."""
    return from_kraus(algebra(n), n, [[np.eye(n)]])


def apply(phi: CpMap, a: Sequence[np.ndarray]) -> np.ndarray:
    """Evaluate ``Phi(a)`` for ``a`` given as a list of blocks."""
    a = _check_element(phi.algebra, a)
    out = np.zeros((phi.hdim, phi.hdim), dtype=complex)
    for i, block in enumerate(a):
        out += np.einsum("pq,pxqy->xy", block, phi.block4(i))
    return out


def unit(phi: CpMap) -> np.ndarray:
    """``Phi(1)``."""
    out = np.zeros((phi.hdim, phi.hdim), dtype=complex)
    for i in range(len(phi.algebra)):
        out += np.einsum("pxpy->xy", phi.block4(i))
    return out


def from_kraus(alg: AlgebraSpec, hdim: int, kraus: Sequence[Sequence[np.ndarray]]) -> CpMap:
    """Build ``a -> sum_i sum_s K_{i,s}* a_i K_{i,s}``.

    :param kraus: one list per algebra block of ``n_i x hdim`` matrices.
    """
    if len(kraus) != len(alg):
        raise DimMismatch(f"{len(kraus)} Kraus lists for {len(alg)} blocks")
    choi = []
    for n, ops in zip(alg.blocks, kraus):
        C = np.zeros((n * hdim, n * hdim), dtype=complex)
        for K in ops:
            K = np.asarray(K, dtype=complex)
            if K.shape != (n, hdim):
                raise DimMismatch(f"Kraus shape {K.shape}, expected {(n, hdim)}")
            v = K.conj().reshape(-1)
            C += np.outer(v, v.conj())
        choi.append(C)
    return CpMap(alg, hdim, tuple(choi))


def kraus_from_vector(v: np.ndarray, n: int, d: int) -> np.ndarray:
    """Inverse of the Choi vectorization: ``K`` with ``conj(K).ravel() == v``."""
    return v.conj().reshape(n, d)


def _fix_phase(v: np.ndarray) -> np.ndarray:
    idx = np.flatnonzero(np.abs(v) > 1e-8 * max(1.0, np.abs(v).max()))
    if idx.size == 0:
        return v
    z = v[idx[0]]
    return v * (np.conj(z) / abs(z))


def choi_factors(phi: CpMap, tol: Tolerances = DEFAULT_TOL) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per-block eigen-factorization of the Choi blocks.

    Eigenvalues below ``eig_cut`` times the largest eigenvalue over all
    blocks (floored at 1) are discarded, so a block holding only rounding
    noise gets rank zero.

    :return: per block, ``(eigenvalues, vectors)`` sorted by descending
        eigenvalue, each vector phase-fixed so its first nonzero entry is
        real positive.
    """
    spectra = []
    for C in phi.choi:
        H = la.check_hermitian(C)
        if H.shape[0] == 0:
            spectra.append((np.zeros(0), np.zeros((0, 0), dtype=complex)))
            continue
        w, U = np.linalg.eigh(H)
        spectra.append((w[::-1], U[:, ::-1]))
    lam_max = max([float(np.abs(w).max()) for w, _ in spectra if w.size] + [0.0])
    floor = tol.eig_cut * max(1.0, lam_max)
    out = []
    for w, U in spectra:
        if w.size and w[-1] < -floor:
            raise NotCP(f"Choi eigenvalue {w[-1]:.3e} below -{floor:.1e}")
        keep = w > floor
        vecs = np.column_stack([_fix_phase(U[:, j]) for j in np.flatnonzero(keep)]) if keep.any() else U[:, :0]
        out.append((w[keep], vecs))
    return out


def kraus_of(phi: CpMap, tol: Tolerances = DEFAULT_TOL) -> list[list[np.ndarray]]:
    """Minimal Kraus family of a CP map, one list per algebra block."""
    out = []
    for n, (w, U) in zip(phi.algebra.blocks, choi_factors(phi, tol)):
        out.append([kraus_from_vector(np.sqrt(w[j]) * U[:, j], n, phi.hdim) for j in range(w.size)])
    return out


def choi_ranks(phi: CpMap, tol: Tolerances = DEFAULT_TOL) -> list[int]:
    return [w.size for w, _ in choi_factors(phi, tol)]


def choi_spectra(phi: CpMap) -> list[np.ndarray]:
    """Descending Choi eigenvalues per block; a unitary-equivalence invariant."""
    return [np.linalg.eigvalsh(la.hermitian_part(C))[::-1] for C in phi.choi]


def map_distance(phi: CpMap, psi: CpMap) -> float:
    """Largest per-block relative Choi distance."""
    _same_shape(phi, psi)
    dists = [la.relative_error(a, b) for a, b in zip(phi.choi, psi.choi)]
    return max(dists) if dists else 0.0


def maps_close(phi: CpMap, psi: CpMap, tol: Tolerances = DEFAULT_TOL) -> bool:
    return map_distance(phi, psi) <= tol.eq_tol


@dataclass(frozen=True)
class UnitClass:
    """Spectral classification of ``P = Phi(1)``.

    ``tag`` is one of ``Zero``, ``Invertible``, ``Projection``, ``GeneralPSD``;
    an invertible projection (the identity) is tagged ``Invertible`` and still
    reports ``is_projection``.
    """

    tag: str
    P: np.ndarray = field(repr=False)
    is_projection: bool = False


def classify_unit(P, tol: Tolerances = DEFAULT_TOL) -> UnitClass:
    P = la.hermitian_part(la.as_matrix(P, square=True))
    if P.shape[0] == 0 or np.linalg.norm(P, 2) <= tol.eig_cut:
        return UnitClass("Zero", P, True)
    projection = la.fro(P @ P - P) <= tol.eq_tol * max(1.0, la.fro(P))
    if la.is_invertible(P, tol):
        return UnitClass("Invertible", P, projection)
    return UnitClass("Projection" if projection else "GeneralPSD", P, projection)


@dataclass
class VerifyReport:
    is_cp: bool
    unit: UnitClass
    is_contractive: bool
    is_unital: bool
    norm: float
    min_eigenvalues: list[float]

    def as_dict(self) -> dict:
        return {
            "is_cp": self.is_cp,
            "unit_class": self.unit.tag,
            "unit_is_projection": self.unit.is_projection,
            "is_contractive": self.is_contractive,
            "is_unital": self.is_unital,
            "norm": self.norm,
            "min_eigenvalues": self.min_eigenvalues,
        }


def is_cp(phi: CpMap, tol: Tolerances = DEFAULT_TOL) -> bool:
    try:
        return all(la.psd_check(C, tol)[0] for C in phi.choi)
    except la.NonHermitian:
        return False


def is_unital(phi: CpMap, tol: Tolerances = DEFAULT_TOL) -> bool:
    return la.relative_error(unit(phi), np.eye(phi.hdim)) <= tol.eq_tol


def is_contractive(phi: CpMap, tol: Tolerances = DEFAULT_TOL) -> bool:
    P = unit(phi)
    try:
        return la.psd_check(np.eye(phi.hdim) - P, tol)[0]
    except la.NonHermitian:
        return False


def verify(phi: CpMap, tol: Tolerances = DEFAULT_TOL) -> VerifyReport:
    """Membership report: CP, unit class, contractive, unital, ``||Phi(1)||``."""
    cp = True
    mins = []
    for C in phi.choi:
        try:
            ok, lam = la.psd_check(C, tol)
        except la.NonHermitian:
            ok, lam = False, float(np.linalg.eigvalsh(la.hermitian_part(C))[0]) if C.size else 0.0
        cp = cp and ok
        mins.append(lam)
    P = unit(phi)
    norm = float(np.linalg.norm(P, 2)) if P.size else 0.0
    return VerifyReport(
        is_cp=cp,
        unit=classify_unit(la.hermitian_part(P), tol),
        is_contractive=is_contractive(phi, tol),
        is_unital=is_unital(phi, tol),
        norm=norm,
        min_eigenvalues=mins,
    )


def cp_order(psi: CpMap, phi: CpMap, tol: Tolerances = DEFAULT_TOL) -> bool:
    """``Psi <=_cp Phi``: every Choi block of ``Phi - Psi`` is PSD."""
    _same_shape(phi, psi)
    return is_cp(phi - psi, tol)


def adjoin(phi: CpMap, T) -> CpMap:
    """``a -> T* Phi(a) T``.

    ``T`` may be rectangular of shape ``(hdim, m)``; the result then acts on
    ``C^m``.
    """
    T = np.asarray(T, dtype=complex)
    if T.ndim != 2 or T.shape[0] != phi.hdim:
        raise DimMismatch(f"T has shape {T.shape}, expected ({phi.hdim}, m)")
    m = T.shape[1]
    choi = []
    for i, n in enumerate(phi.algebra.blocks):
        C = np.einsum("xa,pxqy,yb->paqb", T.conj(), phi.block4(i), T)
        choi.append(C.reshape(n * m, n * m))
    return CpMap(phi.algebra, m, tuple(choi))


def hat(phi: CpMap, tol: Tolerances = DEFAULT_TOL) -> CpMap:
    """Unital renormalization ``Phi(1)^{-1/2} Phi(.) Phi(1)^{-1/2}``."""
    P = la.hermitian_part(unit(phi))
    if not la.is_invertible(P, tol):
        raise UnitNotInvertible("Phi(1) is singular at inv_cut")
    return adjoin(phi, la.psd_inv_sqrt(P, tol))


def direct_sum(phi1: CpMap, phi2: CpMap) -> CpMap:
    """``Phi_1 + Phi_2`` acting block-diagonally on ``H_1 + H_2``."""
    if phi1.algebra != phi2.algebra:
        raise AlgebraMismatch(f"{phi1.algebra.blocks} vs {phi2.algebra.blocks}")
    d1, d2 = phi1.hdim, phi2.hdim
    d = d1 + d2
    choi = []
    for i, n in enumerate(phi1.algebra.blocks):
        C = np.zeros((n, d, n, d), dtype=complex)
        C[:, :d1, :, :d1] = phi1.block4(i)
        C[:, d1:, :, d1:] = phi2.block4(i)
        choi.append(C.reshape(n * d, n * d))
    return CpMap(phi1.algebra, d, tuple(choi))


def direct_sum_all(maps: Sequence[CpMap], alg: AlgebraSpec | None = None) -> CpMap:
    if not maps:
        if alg is None:
            raise DimMismatch("empty direct sum needs an algebra")
        return zero_map(alg, 0)
    out = maps[0]
    for m in maps[1:]:
        out = direct_sum(out, m)
    return out


@dataclass(frozen=True)
class RangeCompression:
    """``Phi`` written as ``diag(Phi_0, 0)`` in the basis ``[range | kernel]``."""

    compressed: CpMap
    range_basis: np.ndarray
    kernel_basis: np.ndarray
    leak: float

    def embed(self, phi0: CpMap) -> CpMap:
        """Place a map on ``ran Phi(1)`` back into ``H`` (zero on the kernel)."""
        return adjoin(phi0, self.range_basis.conj().T)

    def lift_operator(self, T0: np.ndarray, kernel_part: np.ndarray | None = None) -> np.ndarray:
        """``Q0 T0 Q0* + Q1 K Q1*`` with ``K`` defaulting to the identity."""
        Q0, Q1 = self.range_basis, self.kernel_basis
        K = np.eye(Q1.shape[1]) if kernel_part is None else kernel_part
        return Q0 @ T0 @ Q0.conj().T + Q1 @ K @ Q1.conj().T


def compress_to_range(phi: CpMap, tol: Tolerances = DEFAULT_TOL) -> RangeCompression:
    """Restrict ``Phi`` to ``H_0 = ran Phi(1)``, where ``Phi_0(1)`` is invertible."""
    if not is_cp(phi, tol):
        raise NotCP("map is not completely positive")
    d = phi.hdim
    P = la.hermitian_part(unit(phi))
    Q0, Q1 = la.split_space(P, tol)
    if Q0.shape[1] == d:
        eye = np.eye(d, dtype=complex)
        return RangeCompression(phi, eye, np.zeros((d, 0), dtype=complex), 0.0)
    leak = 0.0
    for i in range(len(phi.algebra)):
        blk = phi.block4(i)
        scale = max(1.0, la.fro(phi.choi[i]))
        off = np.einsum("xa,pxqy,yb->paqb", Q1.conj(), blk, np.hstack([Q0, Q1]))
        leak = max(leak, la.fro(off) / scale)
    if leak > tol.eq_tol:
        raise OffDiagonalLeak(f"kernel-side blocks of size {leak:.3e} exceed eq_tol")
    return RangeCompression(adjoin(phi, Q0), Q0, Q1, leak)


def is_homomorphism(phi: CpMap, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Multiplicativity on all pairs of matrix units (and Hermitian Choi blocks)."""
    for C in phi.choi:
        if la.fro(C - C.conj().T) > tol.sym_tol * max(1.0, la.fro(C)):
            return False
    units = list(phi.algebra.matrix_units())
    images = {u: phi.at_unit(*u) for u in units}
    scale = max([1.0] + [la.fro(X) for X in images.values()])
    for (i, p, q), X in images.items():
        for (j, r, s), Y in images.items():
            lhs = images[(i, p, s)] if (i == j and q == r) else 0.0
            if la.fro(lhs - X @ Y) > tol.eq_tol * scale:
                return False
    return True


def random_element(alg: AlgebraSpec, rng: np.random.Generator) -> list[np.ndarray]:
    return [rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) for n in alg.blocks]
