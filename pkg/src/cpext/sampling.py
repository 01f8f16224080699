"""Seeded random matrices and maps used by generators and the property suite."""

from __future__ import annotations

import numpy as np
from scipy.stats import unitary_group

from . import cpmap as cm
from .cpmap import AlgebraSpec, CpMap


def rng_from(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def ginibre(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    if n == 0:
        return np.zeros((0, 0), dtype=complex)
    if n == 1:
        return np.exp(2j * np.pi * rng.random()) * np.ones((1, 1))
    return unitary_group.rvs(n, random_state=rng)


def isometry(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return unitary(rng, rows)[:, :cols]


def psd(rng: np.random.Generator, d: int, rank: int | None = None,
        low: float = 0.1, high: float = 1.0) -> np.ndarray:
    """PSD matrix with ``rank`` eigenvalues drawn from ``[low, high]`` and the rest zero."""
    rank = d if rank is None else rank
    w = np.zeros(d)
    w[:rank] = rng.uniform(low, high, size=rank)
    U = unitary(rng, d)
    return (U * w) @ U.conj().T


def projection(rng: np.random.Generator, d: int, rank: int) -> np.ndarray:
    V = isometry(rng, d, rank)
    return V @ V.conj().T


def unit_matrix(kind: str, d: int, rng: np.random.Generator) -> np.ndarray:
    """Random unit image of the requested class.

    ``identity``, ``invertible`` (spectrum in ``[0.1, 1]``), ``invertible-norm1``
    (invertible, non-identity, norm one), ``projection`` (proper rank),
    ``singular`` (PSD with a kernel) or ``zero``.
    """
    if kind == "identity":
        return np.eye(d, dtype=complex)
    if kind == "invertible":
        return psd(rng, d)
    if kind == "invertible-norm1":
        if d < 2:
            raise ValueError("a non-identity invertible unit of norm one needs d >= 2")
        w = rng.uniform(0.1, 0.9, size=d)
        w[0] = 1.0
        U = unitary(rng, d)
        return (U * w) @ U.conj().T
    if kind == "projection":
        return projection(rng, d, int(rng.integers(1, d + 1)) if d > 1 else 1)
    if kind == "singular":
        return psd(rng, d, int(rng.integers(1, d)) if d > 1 else 0)
    if kind == "zero":
        return np.zeros((d, d), dtype=complex)
    raise ValueError(f"unknown unit kind {kind!r}")


def algebra(rng: np.random.Generator, max_block: int = 4, max_blocks: int = 3,
            commutative: bool = False) -> AlgebraSpec:
    k = int(rng.integers(1, max_blocks + 1))
    if commutative:
        return AlgebraSpec(tuple([1] * max(k, 2)))
    return AlgebraSpec(tuple(int(n) for n in rng.integers(1, max_block + 1, size=k)))


def kraus_map(rng: np.random.Generator, alg: AlgebraSpec, d: int, max_ops: int = 3) -> CpMap:
    """Random CP map with a generically invertible unit."""
    cap = max(max_ops, -(-d // sum(alg.blocks)))
    while True:
        counts = [int(rng.integers(0, min(n * d, cap) + 1)) for n in alg.blocks]
        if sum(c * n for c, n in zip(counts, alg.blocks)) >= d:
            break
    kraus = [[ginibre(rng, n, d) for _ in range(c)] for n, c in zip(alg.blocks, counts)]
    return cm.from_kraus(alg, d, kraus)
