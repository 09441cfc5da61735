"""Deterministic truncated SVD via Gram-matrix eigendecomposition.

The dominant singular triplets are obtained from ``numpy.linalg.eigh`` on the
Gram matrix formed on the shorter side of the input, with the other factor
recovered by one matrix product. This avoids iterative sparse solvers whose
accuracy depends on tolerances: for a given input the output is bit
reproducible. Signs are fixed so that the largest-magnitude entry of every
left singular vector is positive.

Rank deficiency is not special-cased; singular values are never zeroed, and
vectors paired with (numerically) zero singular values are whatever the
eigensolver returns for the null space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["TruncatedSVD", "truncated_svd", "full_singular_values", "left_singular_basis"]


@dataclass(frozen=True)
class TruncatedSVD:
    """Dominant singular triplets: ``u @ diag(singular_values) @ v.T ~ matrix``.

    ``u`` is rows x k, ``v`` is cols x k, both with orthonormal columns;
    ``singular_values`` has length k, nonincreasing and nonnegative.
    """

    u: np.ndarray
    singular_values: np.ndarray
    v: np.ndarray


def _as_matrix(matrix) -> np.ndarray:
    arr = np.asarray(matrix, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got {arr.ndim}-D")
    return arr


def _descending_eigh(gram: np.ndarray):
    # eigh returns ascending eigenvalues; tiny negatives are rounding noise.
    w, vecs = np.linalg.eigh(gram)
    return np.maximum(w[::-1], 0.0), vecs[:, ::-1]


def _fix_signs(u: np.ndarray, v: np.ndarray | None = None):
    lead = np.argmax(np.abs(u), axis=0)
    signs = np.where(u[lead, np.arange(u.shape[1])] < 0.0, -1.0, 1.0)
    if v is None:
        return u * signs
    return u * signs, v * signs


def truncated_svd(matrix, k: int) -> TruncatedSVD:
    """Best rank-``k`` factors of ``matrix`` in the Frobenius norm.

    Requires ``1 <= k <= min(matrix.shape)``.
    """
    m = _as_matrix(matrix)
    rows, cols = m.shape
    k = int(k)
    if not 1 <= k <= min(rows, cols):
        raise ValueError(f"k={k} outside [1, {min(rows, cols)}] for a {rows}x{cols} matrix")
    if rows <= cols:
        w, vecs = _descending_eigh(m @ m.T)
        s = np.sqrt(w[:k])
        u = vecs[:, :k]
        v = m.T @ (u / np.where(s > 0.0, s, 1.0))
    else:
        w, vecs = _descending_eigh(m.T @ m)
        s = np.sqrt(w[:k])
        v = vecs[:, :k]
        u = m @ (v / np.where(s > 0.0, s, 1.0))
    u, v = _fix_signs(u, v)
    return TruncatedSVD(u=u, singular_values=s, v=v)


def full_singular_values(matrix) -> np.ndarray:
    """All ``min(matrix.shape)`` singular values, nonincreasing."""
    m = _as_matrix(matrix)
    rows, cols = m.shape
    gram = m @ m.T if rows <= cols else m.T @ m
    w = np.linalg.eigvalsh(gram)
    return np.sqrt(np.maximum(w[::-1], 0.0))


def left_singular_basis(matrix, k: int) -> np.ndarray:
    """Top-``k`` left singular vectors via the row-side Gram matrix.

    Unlike :func:`truncated_svd` this never forms the right factor, and ``k``
    may exceed the column count: eigenvectors of zero eigenvalues provide a
    deterministic orthonormal completion. This is the kernel the Tucker
    decompositions use, where the row side is a (small) tensor mode.
    """
    m = _as_matrix(matrix)
    k = int(k)
    if not 1 <= k <= m.shape[0]:
        raise ValueError(f"k={k} outside [1, {m.shape[0]}] for a {m.shape[0]}x{m.shape[1]} matrix")
    _, vecs = _descending_eigh(m @ m.T)
    return _fix_signs(vecs[:, :k])
