"""Exterior-power calculus on R^d.

Implements wedge products of vectors, the induced operator on the m-th
exterior power as a q x q compound matrix (q = C(d, m)), and the standard
inner product for which the wedge basis {e_I} is orthonormal.

Basis convention: the m-element subsets I of {0, ..., d-1} are ordered
lexicographically, and coefficient vectors follow that order.  The ambient
dimension is capped at MAX_DIM; every minor is computed directly (LU via
``np.linalg.det``), which is exact enough and trivially auditable at these
sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Sequence

import numpy as np

MAX_DIM = 8
# Reject matrices whose smallest/largest singular value ratio is below this:
# compound-matrix minors carry no precision past that point.
INVERTIBILITY_RTOL = 1e-12


@dataclass(frozen=True)
class BasisIndex:
    """One wedge basis element e_{i_1} ^ ... ^ e_{i_m}, indices 0-based."""

    indices: tuple[int, ...]
    rank: int


@lru_cache(maxsize=None)
def basis_indices(d: int, m: int) -> tuple[BasisIndex, ...]:
    """All strictly increasing m-tuples from {0,...,d-1} in lexicographic order."""
    _check_degree(d, m)
    return tuple(
        BasisIndex(indices=idx, rank=r) for r, idx in enumerate(combinations(range(d), m))
    )


@lru_cache(maxsize=None)
def _index_array(d: int, m: int) -> np.ndarray:
    """(q, m) integer array of the lexicographic index tuples."""
    arr = np.array([b.indices for b in basis_indices(d, m)], dtype=np.intp)
    arr.flags.writeable = False
    return arr


def num_basis(d: int, m: int) -> int:
    _check_degree(d, m)
    return math.comb(d, m)


@dataclass(frozen=True)
class MultiVector:
    """Element of the m-th exterior power of R^d, coefficients in rank order."""

    d: int
    m: int
    coeffs: np.ndarray

    def __post_init__(self):
        _check_degree(self.d, self.m)
        c = np.asarray(self.coeffs, dtype=float)
        q = num_basis(self.d, self.m)
        if c.shape != (q,):
            raise ValueError(f"expected {q} coefficients for (d={self.d}, m={self.m}), got shape {c.shape}")
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))


@dataclass(frozen=True)
class CompoundMatrix:
    """Matrix of the induced operator on the m-th exterior power, wedge basis."""

    d: int
    m: int
    entries: np.ndarray

    def __post_init__(self):
        _check_degree(self.d, self.m)
        e = np.asarray(self.entries, dtype=float)
        q = num_basis(self.d, self.m)
        if e.shape != (q, q):
            raise ValueError(f"expected {q}x{q} entries, got shape {e.shape}")
        e = e.copy()
        e.flags.writeable = False
        object.__setattr__(self, "entries", e)

    def apply(self, v: MultiVector) -> MultiVector:
        if (v.d, v.m) != (self.d, self.m):
            raise ValueError("degree mismatch between compound matrix and multivector")
        return MultiVector(self.d, self.m, self.entries @ v.coeffs)


def wedge(vectors: Sequence[np.ndarray] | np.ndarray) -> MultiVector:
    """Wedge product x_1 ^ ... ^ x_m of m vectors in R^d.

    The coefficient at basis index I is the m x m minor of the d x m matrix
    [x_1 ... x_m] taken at rows I.  Inputs are presorted into a canonical
    column order (tracking the permutation sign) so that swapping two input
    vectors negates every coefficient exactly, not merely up to rounding.
    """
    mat = np.column_stack([np.asarray(v, dtype=float) for v in vectors]) \
        if not isinstance(vectors, np.ndarray) else np.asarray(vectors, dtype=float)
    if mat.ndim != 2:
        raise ValueError("wedge expects a list of vectors or a d x m matrix")
    d, m = mat.shape
    _check_degree(d, m)
    order = np.lexsort(mat[::-1, :])
    sign = _permutation_sign(order)
    canonical = mat[:, order]
    rows = _index_array(d, m)
    blocks = canonical[rows, :]          # (q, m, m): rows I of the column matrix
    coeffs = sign * np.linalg.det(blocks)
    return MultiVector(d, m, coeffs)


def wedge_columns(frames: np.ndarray) -> np.ndarray:
    """Vectorized wedge coefficients for a batch of frames, shape (n, d, m) -> (n, q).

    No canonical reordering here; batch callers only consume the result up to
    sign or through the inner product.
    """
    frames = np.asarray(frames, dtype=float)
    n, d, m = frames.shape
    _check_degree(d, m)
    rows = _index_array(d, m)
    blocks = frames[:, rows, :]          # (n, q, m, m)
    return np.linalg.det(blocks)


def compound(M: np.ndarray, m: int) -> CompoundMatrix:
    """Compound matrix of the induced operator on the m-th exterior power.

    Entry (I, J) is the minor of M with rows I and columns J, so that
    compound(M, 1) = M, compound(M, d) = [det M], and
    compound(M N, m) = compound(M, m) compound(N, m) (Cauchy-Binet).
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("compound expects a square matrix")
    d = M.shape[0]
    _check_degree(d, m)
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[-1] <= INVERTIBILITY_RTOL * sv[0]:
        raise ValueError(
            f"matrix is singular within tolerance (sv ratio {sv[-1] / sv[0]:.3e} < {INVERTIBILITY_RTOL:.0e})"
        )
    return CompoundMatrix(d, m, compound_entries(M, m))


def compound_entries(M: np.ndarray, m: int) -> np.ndarray:
    """Raw (q, q) minor matrix of M; no invertibility guard."""
    M = np.asarray(M, dtype=float)
    d = M.shape[0]
    idx = _index_array(d, m)
    rows_sel = M[idx, :]                          # (q, m, d)
    blocks = rows_sel[:, :, idx]                  # (q, m, q, m)
    blocks = np.transpose(blocks, (0, 2, 1, 3))   # (q, q, m, m)
    return np.linalg.det(blocks)


def inner(u: MultiVector, v: MultiVector) -> float:
    """Inner product on the exterior power; the wedge basis is orthonormal.

    For decomposables this equals the Gram determinant det[<x_i, y_j>].
    """
    if (u.d, u.m) != (v.d, v.m):
        raise ValueError("multivector shape mismatch")
    return float(np.dot(u.coeffs, v.coeffs))


def _check_degree(d: int, m: int) -> None:
    if not 1 <= m <= d:
        raise ValueError(f"degree m={m} must satisfy 1 <= m <= d={d}")
    if d > MAX_DIM:
        raise ValueError(f"ambient dimension {d} exceeds supported cap {MAX_DIM}")


def _permutation_sign(perm: np.ndarray) -> float:
    visited = np.zeros(len(perm), dtype=bool)
    sign = 1.0
    for start in range(len(perm)):
        if visited[start]:
            continue
        length = 0
        j = start
        while not visited[j]:
            visited[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign
