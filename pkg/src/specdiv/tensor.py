"""Dense tensor algebra: unfoldings, foldings, mode products and norms.

Tensors are plain ``numpy.ndarray`` objects with at least two axes ("modes"),
held in C memory order, i.e. the last index varies fastest in the flat data.
Matricizations use the classic tensor-toolkit column convention: entry
``(i_0, ..., i_{d-1})`` lands in column ``sum_{m != k} i_m * J_m`` of the
mode-``k`` unfolding, with ``J_m = prod_{l < m, l != k} n_l``, so among the
remaining modes the first one varies fastest. All arithmetic is double
precision; every function returns a new array and never mutates its inputs.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "unfold",
    "fold",
    "mode_dot",
    "multi_mode_dot",
    "general_flatten",
    "frobenius_norm",
]


def _as_tensor(tensor) -> np.ndarray:
    arr = np.asarray(tensor, dtype=np.float64)
    if arr.ndim < 2:
        raise ValueError(f"expected a tensor with at least 2 modes, got {arr.ndim}")
    return arr


def _check_mode(arr: np.ndarray, mode: int) -> int:
    mode = int(mode)
    if not 0 <= mode < arr.ndim:
        raise ValueError(f"mode {mode} out of range for a {arr.ndim}-mode tensor")
    return mode


def unfold(tensor, mode: int) -> np.ndarray:
    """Matricize ``tensor`` along ``mode``.

    Parameters
    ----------
    tensor : ndarray
    mode : int
        Axis whose fibers become the matrix columns (0-based).

    Returns
    -------
    ndarray of shape ``(tensor.shape[mode], prod(other dims))``
    """
    arr = _as_tensor(tensor)
    mode = _check_mode(arr, mode)
    return np.reshape(np.moveaxis(arr, mode, 0), (arr.shape[mode], -1), order="F")


def fold(matrix, mode: int, dims) -> np.ndarray:
    """Inverse of :func:`unfold`: rebuild the tensor of shape ``dims``.

    ``fold(unfold(t, k), k, t.shape)`` reproduces ``t`` bit for bit.
    """
    dims = tuple(int(n) for n in dims)
    if len(dims) < 2 or any(n < 1 for n in dims):
        raise ValueError(f"invalid target dims {dims}")
    mode = int(mode)
    if not 0 <= mode < len(dims):
        raise ValueError(f"mode {mode} out of range for dims {dims}")
    arr = np.asarray(matrix, dtype=np.float64)
    rest = tuple(n for i, n in enumerate(dims) if i != mode)
    expected = (dims[mode], math.prod(rest))
    if arr.ndim != 2 or arr.shape != expected:
        raise ValueError(f"matrix shape {arr.shape} does not match {expected} for dims {dims}")
    return np.moveaxis(arr.reshape((dims[mode],) + rest, order="F"), 0, mode)


def mode_dot(tensor, matrix, mode: int) -> np.ndarray:
    """Contract ``matrix`` against ``tensor`` along ``mode``.

    Equivalent to ``fold(matrix @ unfold(tensor, mode), mode, new_dims)``
    where ``new_dims`` replaces ``tensor.shape[mode]`` with ``matrix.shape[0]``.
    """
    arr = _as_tensor(tensor)
    mode = _check_mode(arr, mode)
    mat = np.asarray(matrix, dtype=np.float64)
    if mat.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got {mat.ndim}-D")
    if mat.shape[1] != arr.shape[mode]:
        raise ValueError(
            f"matrix has {mat.shape[1]} columns but mode {mode} has size {arr.shape[mode]}"
        )
    new_dims = list(arr.shape)
    new_dims[mode] = mat.shape[0]
    return fold(mat @ unfold(arr, mode), mode, new_dims)


def multi_mode_dot(tensor, matrices, modes=None) -> np.ndarray:
    """Apply :func:`mode_dot` for several (matrix, mode) pairs.

    ``modes`` defaults to ``0, 1, ...``; the modes must be distinct, which
    makes the result independent of the application order.
    """
    arr = _as_tensor(tensor)
    matrices = list(matrices)
    if modes is None:
        modes = range(len(matrices))
    modes = [int(m) for m in modes]
    if len(modes) != len(matrices):
        raise ValueError(f"{len(matrices)} matrices but {len(modes)} modes")
    if len(set(modes)) != len(modes):
        raise ValueError(f"duplicate modes in {modes}")
    out = arr
    for mat, mode in zip(matrices, modes):
        out = mode_dot(out, mat, mode)
    return out


def general_flatten(tensor, row_modes, col_modes) -> np.ndarray:
    """Matricize ``tensor`` with ``row_modes`` grouped as rows, ``col_modes`` as columns.

    The two ordered groups must partition all modes. Within each group the
    first listed mode varies fastest, matching the :func:`unfold` convention;
    ``general_flatten(t, (k,), rest)`` equals ``unfold(t, k)``.
    """
    arr = _as_tensor(tensor)
    p = tuple(int(i) for i in row_modes)
    q = tuple(int(i) for i in col_modes)
    if not p or not q:
        raise ValueError("row and column mode groups must both be nonempty")
    if any(not 0 <= i < arr.ndim for i in p + q):
        raise ValueError(f"mode out of range in partition {p} | {q}")
    if sorted(p + q) != list(range(arr.ndim)):
        raise ValueError(f"groups {p} | {q} do not partition the {arr.ndim} modes")
    rows = math.prod(arr.shape[i] for i in p)
    return np.transpose(arr, p + q).reshape((rows, -1), order="F")


def frobenius_norm(tensor) -> float:
    """Square root of the sum of squared entries."""
    arr = np.asarray(tensor, dtype=np.float64)
    return float(np.linalg.norm(arr.ravel()))
