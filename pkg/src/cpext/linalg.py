"""Tolerance-aware dense complex linear algebra.

All decisions that are exact in theory (PSD or not, invertible or not, same
range or not) are made here against the cutoffs carried by
:class:`Tolerances`.  Everything else in the package routes its rank and
positivity questions through these helpers so that the cutoff policy lives in
one place.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BadScalar,
    KernelMismatch,
    NonHermitian,
    NotInvertible,
    NotPSD,
    OrderViolation,
    RangeMismatch,
)


@dataclass(frozen=True)
class Tolerances:
    """Relative cutoffs used for every numerical decision.

    Attributes
    ----------
    eig_cut : float
        Eigenvalue cutoff for PSD and Choi-rank decisions, relative to
        ``max(1, largest |eigenvalue|)``.
    inv_cut : float
        Singular-value cutoff for rank and invertibility, relative to the
        largest singular value.
    eq_tol : float
        Relative Frobenius tolerance for operator and map equality.
    sym_tol : float
        Hermiticity tolerance.
    """

    eig_cut: float = 1e-9
    inv_cut: float = 1e-8
    eq_tol: float = 1e-8
    sym_tol: float = 1e-10

    def __post_init__(self):
        for name in ("eig_cut", "inv_cut", "eq_tol", "sym_tol"):
            value = getattr(self, name)
            if not (0.0 < value < 1.0):
                raise BadScalar(f"{name} must lie in (0, 1), got {value!r}")

    @property
    def spectral(self) -> float:
        """Threshold for declaring two spectra different.

        Deliberately looser than ``eq_tol`` so that a spectral mismatch is
        only reported when it is far above accumulated rounding.
        """
        return float(np.sqrt(self.eq_tol))

    def as_dict(self) -> dict:
        return {
            "eig_cut": self.eig_cut,
            "inv_cut": self.inv_cut,
            "eq_tol": self.eq_tol,
            "sym_tol": self.sym_tol,
        }


DEFAULT_TOL = Tolerances()


def as_matrix(M, square: bool = False) -> np.ndarray:
    """Return ``M`` as a finite 2-D complex array."""
    arr = np.asarray(M, dtype=complex)
    if arr.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {arr.shape}")
    if square and arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has non-finite entries")
    return arr


def fro(M) -> float:
    return float(np.linalg.norm(M))


def dagger(M: np.ndarray) -> np.ndarray:
    return M.conj().T


def hermitian_part(M: np.ndarray) -> np.ndarray:
    return (M + M.conj().T) / 2


def relative_error(A, B) -> float:
    """``||A - B||_F / max(1, ||A||_F, ||B||_F)``."""
    return fro(A - B) / max(1.0, fro(A), fro(B))


def close(A, B, tol: Tolerances = DEFAULT_TOL) -> bool:
    return relative_error(A, B) <= tol.eq_tol


def check_hermitian(M, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Return the Hermitian part of ``M``, raising if it is too far from it."""
    M = as_matrix(M, square=True)
    if fro(M - M.conj().T) > tol.sym_tol * max(1.0, fro(M)):
        raise NonHermitian(f"asymmetry {fro(M - M.conj().T):.3e} exceeds sym_tol")
    return hermitian_part(M)


def _eig_floor(w: np.ndarray, tol: Tolerances) -> float:
    scale = max(1.0, float(np.max(np.abs(w)))) if w.size else 1.0
    return tol.eig_cut * scale


def psd_check(M, tol: Tolerances = DEFAULT_TOL) -> tuple[bool, float]:
    """Test positivity.

    :param M: Hermitian matrix (within ``sym_tol``).
    :return: ``(is_psd, smallest_eigenvalue)``.
    """
    H = check_hermitian(M, tol)
    if H.shape[0] == 0:
        return True, 0.0
    w = np.linalg.eigvalsh(H)
    lam_min = float(w[0])
    return lam_min >= -_eig_floor(w, tol), lam_min


def _clamped_eigh(M, tol: Tolerances) -> tuple[np.ndarray, np.ndarray]:
    H = check_hermitian(M, tol)
    if H.shape[0] == 0:
        return np.zeros(0), np.zeros((0, 0), dtype=complex)
    w, U = np.linalg.eigh(H)
    floor = _eig_floor(w, tol)
    if w[0] < -floor:
        raise NotPSD(f"smallest eigenvalue {w[0]:.3e} below -{floor:.1e}")
    # eigenvalues inside the cutoff band (either sign) are treated as exact zeros
    w = np.where(np.abs(w) <= floor, 0.0, w)
    return w, U


def psd_sqrt(M, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Positive square root of a PSD matrix."""
    w, U = _clamped_eigh(M, tol)
    return (U * np.sqrt(w)) @ U.conj().T


def psd_inv_sqrt(M, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Inverse square root on the range of ``M``, zero on its kernel."""
    w, U = _clamped_eigh(M, tol)
    inv = np.zeros_like(w)
    nz = w > 0
    inv[nz] = 1.0 / np.sqrt(w[nz])
    return (U * inv) @ U.conj().T


def psd_function(M, fn, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Apply a scalar function to the clamped spectrum of a PSD matrix."""
    w, U = _clamped_eigh(M, tol)
    return (U * fn(w)) @ U.conj().T


def numerical_rank(s: np.ndarray, tol: Tolerances) -> int:
    """Rank from singular values ``s`` (descending) at ``inv_cut * s_max``."""
    if s.size == 0 or s[0] <= 0.0:
        return 0
    return int(np.sum(s > tol.inv_cut * s[0]))


def range_basis(M, tol: Tolerances = DEFAULT_TOL) -> tuple[np.ndarray, int]:
    """Orthonormal basis of the numerical range of ``M`` and its rank."""
    M = as_matrix(M)
    if min(M.shape) == 0:
        return np.zeros((M.shape[0], 0), dtype=complex), 0
    U, s, _ = np.linalg.svd(M)
    r = numerical_rank(s, tol)
    return U[:, :r], r


def kernel_basis(M, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of the numerical kernel of ``M``."""
    M = as_matrix(M)
    n = M.shape[1]
    if M.shape[0] == 0:
        return np.eye(n, dtype=complex)
    _, s, Vh = np.linalg.svd(M)
    r = numerical_rank(s, tol)
    return Vh[r:].conj().T


def split_space(M, tol: Tolerances = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal bases of ``ran M`` and its orthogonal complement."""
    M = as_matrix(M, square=True)
    n = M.shape[0]
    if n == 0:
        empty = np.zeros((0, 0), dtype=complex)
        return empty, empty
    U, s, _ = np.linalg.svd(M)
    r = numerical_rank(s, tol)
    return U[:, :r], U[:, r:]


def pinv(M, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Moore-Penrose pseudo-inverse at the ``inv_cut`` rank cutoff."""
    M = as_matrix(M)
    if min(M.shape) == 0:
        return np.zeros(M.shape[::-1], dtype=complex)
    U, s, Vh = np.linalg.svd(M, full_matrices=False)
    r = numerical_rank(s, tol)
    return (Vh[:r].conj().T / s[:r]) @ U[:, :r].conj().T


def is_invertible(M, tol: Tolerances = DEFAULT_TOL) -> bool:
    M = as_matrix(M, square=True)
    if M.shape[0] == 0:
        return True
    s = np.linalg.svd(M, compute_uv=False)
    return bool(s[0] > 0 and s[-1] > tol.inv_cut * s[0])


def polar_unitary(X) -> np.ndarray:
    """Unitary factor ``U`` of the polar decomposition ``X = U|X|``."""
    W, _, Vh = np.linalg.svd(as_matrix(X, square=True))
    return W @ Vh


def subspace_excess(inner: np.ndarray, outer: np.ndarray) -> float:
    """Spectral norm of the part of ``span(inner)`` outside ``span(outer)``.

    Both arguments are orthonormal column bases.  Zero means containment.
    """
    if inner.shape[1] == 0:
        return 0.0
    residual = inner - outer @ (outer.conj().T @ inner)
    return float(np.linalg.norm(residual, 2))


def invertible_factor(A, B, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Invertible ``C`` with ``A = B C`` for square ``A``, ``B`` of equal range and kernel.

    ``C`` is ``pinv(B) @ A`` on the co-kernel and the identity on ``ker A``.
    """
    A = as_matrix(A, square=True)
    B = as_matrix(B, square=True)
    if A.shape != B.shape:
        raise RangeMismatch(f"shape mismatch {A.shape} vs {B.shape}")
    n = A.shape[0]
    scale_a = max(1.0, fro(A))
    QA, rank_a = range_basis(A, tol)
    QB, rank_b = range_basis(B, tol)
    leak = fro(A - QB @ (QB.conj().T @ A))
    if rank_a != rank_b or leak > tol.eq_tol * scale_a:
        raise RangeMismatch(f"ranks {rank_a}/{rank_b}, range leak {leak:.3e}")
    NA = kernel_basis(A, tol)
    if NA.shape[1] != n - rank_a:
        raise KernelMismatch("kernel dimension inconsistent with rank")
    if fro(B @ NA) > tol.eq_tol * max(1.0, fro(B)):
        raise KernelMismatch(f"B does not vanish on ker A ({fro(B @ NA):.3e})")
    C = pinv(B, tol) @ A + NA @ NA.conj().T
    if not is_invertible(C, tol):
        raise NotInvertible("factor is singular at inv_cut")
    residual = fro(A - B @ C)
    if residual > tol.eq_tol * scale_a:
        raise RangeMismatch(f"factorization residual {residual:.3e}")
    return C


def douglas_complete(P, Q, t: float, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Invertible ``Y`` with ``P - t Q = Y* P Y`` for ``0 <= Q <= P`` and ``0 < t < 1``.

    ``Y`` is the invertible factor in ``(P - tQ)^{1/2} = P^{1/2} Y``.
    """
    t = float(t)
    if not (0.0 < t < 1.0):
        raise BadScalar(f"t must lie in (0, 1), got {t!r}")
    P = check_hermitian(P, tol)
    Q = check_hermitian(Q, tol)
    if P.shape != Q.shape:
        raise OrderViolation(f"shape mismatch {P.shape} vs {Q.shape}")
    if not psd_check(Q, tol)[0]:
        raise OrderViolation("Q is not PSD")
    ok, lam = psd_check(P - Q, tol)
    if not ok:
        raise OrderViolation(f"Q is not dominated by P (lambda_min {lam:.3e})")
    target = P - t * Q
    Y = invertible_factor(psd_sqrt(target, tol), psd_sqrt(P, tol), tol)
    residual = fro(target - Y.conj().T @ P @ Y)
    if residual > tol.eq_tol * max(1.0, fro(P)):
        raise OrderViolation(f"completion residual {residual:.3e}")
    return Y


def range_conjugacy_check(T, P, tol: Tolerances = DEFAULT_TOL) -> tuple[bool, np.ndarray | None]:
    """Decide whether ``T* P^{1/2} = P^{1/2} Y`` for some invertible ``Y``.

    :return: ``(True, Y)`` when the ranges of ``T* P^{1/2}`` and ``P^{1/2}``
        agree, ``(False, None)`` otherwise.
    """
    T = as_matrix(T, square=True)
    if not is_invertible(T, tol):
        raise NotInvertible("T is singular at inv_cut")
    root = psd_sqrt(P, tol)
    A = T.conj().T @ root
    try:
        return True, invertible_factor(A, root, tol)
    except (RangeMismatch, KernelMismatch):
        return False, None
