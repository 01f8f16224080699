"""Brute-force extremality search for tiny unital maps.

Every ``Psi <=_cp Phi`` has Choi blocks ``R M R`` with ``R = C_Phi^{1/2}`` and
``0 <= M <= I``.  With ``M`` bounded away from ``0`` and ``I`` both ``Psi`` and
``Phi - Psi`` have invertible units, so each sample is a proper two-term
decomposition whose terms are the unital renormalizations of ``Psi`` and
``Phi - Psi``.  A term whose Choi spectra differ from those of ``Phi`` cannot
be unitarily equivalent to it.  The search maximizes that spectral gap over
``M``: a coarse grid along basis directions, random probes, then Nelder-Mead.

Only numpy and scipy are used here; nothing is shared with the decider.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

FLOOR = 0.05
GRID = (-3.0, -1.0, 1.0, 3.0)
PROBES = 16
THRESHOLD = 1e-6


@dataclass
class OracleResult:
    extreme: bool
    gap: float
    evaluations: int


def _sqrt_psd(C: np.ndarray) -> np.ndarray:
    w, U = np.linalg.eigh((C + C.conj().T) / 2)
    return (U * np.sqrt(np.clip(w, 0.0, None))) @ U.conj().T


def _hermitian(x: np.ndarray, m: int) -> np.ndarray:
    G = np.zeros((m, m), dtype=complex)
    iu = np.triu_indices(m, 1)
    k = len(iu[0])
    G[np.diag_indices(m)] = x[:m]
    G[iu] = x[m:m + k] + 1j * x[m + k:m + 2 * k]
    return G + np.triu(G, 1).conj().T


def _squash(G: np.ndarray) -> np.ndarray:
    """Matrix sigmoid into ``[FLOOR, 1 - FLOOR]``."""
    w, U = np.linalg.eigh(G)
    s = 0.5 * (1.0 + w / np.sqrt(1.0 + w * w))
    return (U * (FLOOR + (1.0 - 2.0 * FLOOR) * s)) @ U.conj().T


def _unital_form(blocks: list[np.ndarray], sizes: list[int], d: int) -> list[np.ndarray]:
    unit = sum(C.reshape(n, d, n, d).trace(axis1=0, axis2=2) for C, n in zip(blocks, sizes))
    w, U = np.linalg.eigh((unit + unit.conj().T) / 2)
    X = (U / np.sqrt(w)) @ U.conj().T
    return [np.kron(np.eye(n), X) @ C @ np.kron(np.eye(n), X) for C, n in zip(blocks, sizes)]


def search(choi: list[np.ndarray], sizes: list[int], d: int, seed: int = 0) -> OracleResult:
    """Search proper two-term decompositions of the unital map with Choi blocks ``choi``."""
    roots = [_sqrt_psd(C) for C in choi]
    spectra = [np.linalg.eigvalsh(C) for C in choi]
    dims = [n * d for n in sizes]
    offsets = np.cumsum([0] + [m * m for m in dims])
    count = [0]

    def gap(x: np.ndarray) -> float:
        count[0] += 1
        Ms = [_squash(_hermitian(x[a:b], m)) for a, b, m in zip(offsets, offsets[1:], dims)]
        worst = 0.0
        for part in (Ms, [np.eye(m) - M for M, m in zip(Ms, dims)]):
            blocks = [R @ M @ R for R, M in zip(roots, part)]
            for C, ref in zip(_unital_form(blocks, sizes, d), spectra):
                worst = max(worst, float(np.max(np.abs(np.linalg.eigvalsh(C) - ref))))
        return worst

    size = int(offsets[-1])
    rng = np.random.default_rng(seed)
    starts = []
    for k in range(size):
        for amp in GRID:
            x = np.zeros(size)
            x[k] = amp
            starts.append(x)
    starts.extend(rng.normal(scale=2.0, size=(PROBES, size)))
    scored = [(gap(x), x) for x in starts]
    best_gap, best_x = max(scored, key=lambda t: t[0])
    if best_gap <= THRESHOLD:
        res = minimize(lambda x: -gap(x), best_x, method="Nelder-Mead",
                       options={"maxiter": 400, "xatol": 1e-6, "fatol": 1e-12})
        best_gap = max(best_gap, -float(res.fun))
    return OracleResult(best_gap <= THRESHOLD, best_gap, count[0])
