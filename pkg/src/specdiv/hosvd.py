"""Tucker decompositions of dense tensors and their error/storage accounting.

Two algorithms are provided. The truncated variant (``t_hosvd``) takes, for
every mode, the dominant left singular vectors of the *original* tensor's
unfolding and contracts them all at the end. The sequentially truncated
variant (``st_hosvd``) processes modes one at a time: each step takes the
dominant left singular vectors of the *current* core's unfolding and
contracts immediately, recording the energy discarded by that step
(``norm(core_before)**2 - norm(core_after)**2``). At the end, the total
squared reconstruction error telescopes to the sum of the per-step energies.

Serialized container (magic ``TUCKF001``), all little-endian, no padding::

    offset 0   magic            8 bytes  b"TUCKF001"
    offset 8   method           u8       1 = t-hosvd, 2 = st-hosvd
    offset 9   d                u8       number of modes
    offset 10  processing order d x u8   0-based mode numbers, a permutation
    10 + d     dims             d x u32
    10 + 5d    rank             d x u32
    10 + 9d    factors          for each mode i: dims[i] * rank[i] f64, row-major
    ...        core             prod(rank) f64, row-major (last index fastest)
"""

from __future__ import annotations

import enum
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._util import atomic_write_bytes
from .tensor import frobenius_norm, mode_dot, multi_mode_dot, unfold
from .tsvd import full_singular_values, left_singular_basis

__all__ = [
    "Method",
    "TuckerFactors",
    "StorageCost",
    "t_hosvd",
    "st_hosvd",
    "reconstruct",
    "exact_error",
    "error_upper_bound",
    "storage_cost",
    "TuckerFormatError",
    "write_tucker",
    "read_tucker",
]

TUCKER_MAGIC = b"TUCKF001"


class Method(enum.Enum):
    T_HOSVD = "t-hosvd"
    ST_HOSVD = "st-hosvd"


class TuckerFormatError(ValueError):
    """Raised when a TUCKF001 container cannot be parsed."""


@dataclass
class TuckerFactors:
    """Core tensor plus one orthonormal-column factor matrix per mode.

    ``factors[i]`` has shape ``(dims[i], rank[i])``. ``processing_order``
    is the identity for the truncated algorithm; ``step_energies`` (aligned
    with ``processing_order``) is only populated by the sequential one.
    """

    core: np.ndarray
    factors: list[np.ndarray]
    method: Method
    processing_order: tuple[int, ...]
    step_energies: tuple[float, ...] | None = None

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.shape[0] for f in self.factors)

    @property
    def rank(self) -> tuple[int, ...]:
        return tuple(self.core.shape)


@dataclass(frozen=True)
class StorageCost:
    """Scalar count of a Tucker representation and its compression ratios."""

    units: int
    relative_ratio: float
    absolute_ratio: float

    @property
    def degenerate(self) -> bool:
        """True when the "compressed" form is at least as large as a denominator."""
        return self.relative_ratio > 1.0 or self.absolute_ratio > 1.0


def _validate_rank(dims, rank) -> tuple[int, ...]:
    rank = tuple(int(r) for r in rank)
    if len(rank) != len(dims):
        raise ValueError(f"rank {rank} has {len(rank)} components for {len(dims)} modes")
    for i, (r, n) in enumerate(zip(rank, dims)):
        if not 1 <= r <= n:
            raise ValueError(f"rank component {r} outside [1, {n}] at mode {i}")
    return rank


def _check_contraction(norm_in: float, core: np.ndarray) -> None:
    # Orthonormal projections cannot grow the norm; allow rounding slack.
    norm_core = frobenius_norm(core)
    if norm_core > norm_in * (1.0 + 1e-12) + 1e-300:
        raise ArithmeticError(
            f"core norm {norm_core} exceeds input norm {norm_in}; factors are not orthonormal"
        )


def t_hosvd(tensor, rank) -> TuckerFactors:
    """Truncated Tucker decomposition.

    Every factor comes from the unfolding of the original tensor, so the
    result does not depend on any processing order.
    """
    arr = np.asarray(tensor, dtype=np.float64)
    rank = _validate_rank(arr.shape, rank)
    factors = [left_singular_basis(unfold(arr, i), rank[i]) for i in range(arr.ndim)]
    core = multi_mode_dot(arr, [f.T for f in factors])
    _check_contraction(frobenius_norm(arr), core)
    return TuckerFactors(
        core=core,
        factors=factors,
        method=Method.T_HOSVD,
        processing_order=tuple(range(arr.ndim)),
    )


def st_hosvd(tensor, rank, order=None) -> TuckerFactors:
    """Sequentially truncated Tucker decomposition.

    Modes are processed in ``order`` (default natural order); each step
    truncates the current core along one mode before moving on, which makes
    later SVDs cheaper but order-dependent.
    """
    arr = np.asarray(tensor, dtype=np.float64)
    rank = _validate_rank(arr.shape, rank)
    if order is None:
        order = tuple(range(arr.ndim))
    else:
        order = tuple(int(i) for i in order)
        if sorted(order) != list(range(arr.ndim)):
            raise ValueError(f"order {order} is not a permutation of the {arr.ndim} modes")
    core = arr
    factors: list[np.ndarray | None] = [None] * arr.ndim
    energies = []
    for mode in order:
        u = left_singular_basis(unfold(core, mode), rank[mode])
        before = frobenius_norm(core) ** 2
        core = mode_dot(core, u.T, mode)
        energies.append(before - frobenius_norm(core) ** 2)
        factors[mode] = u
    _check_contraction(frobenius_norm(arr), core)
    return TuckerFactors(
        core=core,
        factors=factors,
        method=Method.ST_HOSVD,
        processing_order=order,
        step_energies=tuple(energies),
    )


def reconstruct(f: TuckerFactors) -> np.ndarray:
    """Expand the factored form back to a full tensor of the original dims."""
    return multi_mode_dot(f.core, f.factors)


def exact_error(tensor, f: TuckerFactors) -> float:
    """Frobenius norm of ``tensor - reconstruct(f)``."""
    arr = np.asarray(tensor, dtype=np.float64)
    if arr.shape != f.dims:
        raise ValueError(f"tensor dims {arr.shape} do not match factored dims {f.dims}")
    return frobenius_norm(arr - reconstruct(f))


def error_upper_bound(tensor, rank) -> float:
    """Bound on the reconstruction error at ``rank``, from per-mode SVD tails.

    The squared bound sums, over every mode, the squared singular values of
    the mode unfolding beyond the kept rank. It dominates the exact error of
    both decomposition variants at the same rank.
    """
    arr = np.asarray(tensor, dtype=np.float64)
    rank = _validate_rank(arr.shape, rank)
    total = 0.0
    for i in range(arr.ndim):
        s = full_singular_values(unfold(arr, i))
        total += float(np.sum(s[rank[i]:] ** 2))
    return math.sqrt(total)


def storage_cost(dims, rank, relative_denominator, absolute_denominator) -> StorageCost:
    """Stored-scalar count ``sum(n_i * r_i) + prod(r_i)`` and its ratios.

    The denominators are caller-supplied scalar counts of the uncompressed
    data; the band pipeline uses ``rows * cols * 2`` (one RED + one NIR
    raster) for the relative ratio and ``rows * cols * 3`` (the stacked
    tensor with one band duplicated) for the absolute one.
    """
    dims = tuple(int(n) for n in dims)
    if any(n < 1 for n in dims):
        raise ValueError(f"invalid dims {dims}")
    rank = _validate_rank(dims, rank)
    relative_denominator = int(relative_denominator)
    absolute_denominator = int(absolute_denominator)
    if relative_denominator <= 0 or absolute_denominator <= 0:
        raise ValueError("denominators must be positive")
    units = sum(n * r for n, r in zip(dims, rank)) + math.prod(rank)
    return StorageCost(
        units=units,
        relative_ratio=units / relative_denominator,
        absolute_ratio=units / absolute_denominator,
    )


_METHOD_CODES = {Method.T_HOSVD: 1, Method.ST_HOSVD: 2}
_CODE_METHODS = {v: k for k, v in _METHOD_CODES.items()}


def write_tucker(f: TuckerFactors, path) -> None:
    """Serialize ``f`` to the TUCKF001 container at ``path`` (atomic)."""
    d = len(f.factors)
    if d > 255:
        raise ValueError(f"cannot serialize a {d}-mode tensor")
    buf = bytearray()
    buf += TUCKER_MAGIC
    buf += struct.pack("<BB", _METHOD_CODES[f.method], d)
    buf += struct.pack(f"<{d}B", *f.processing_order)
    buf += struct.pack(f"<{d}I", *f.dims)
    buf += struct.pack(f"<{d}I", *f.rank)
    for factor in f.factors:
        buf += np.ascontiguousarray(factor, dtype="<f8").tobytes()
    buf += np.ascontiguousarray(f.core, dtype="<f8").tobytes()
    atomic_write_bytes(path, bytes(buf))


def read_tucker(path) -> TuckerFactors:
    """Parse a TUCKF001 container; raises :class:`TuckerFormatError` on damage."""
    data = Path(path).read_bytes()
    if len(data) < len(TUCKER_MAGIC) or data[: len(TUCKER_MAGIC)] != TUCKER_MAGIC:
        raise TuckerFormatError(f"{path}: bad magic at byte 0, expected {TUCKER_MAGIC!r}")
    if len(data) < 10:
        raise TuckerFormatError(f"{path}: truncated header at byte {len(data)}")
    method_code, d = struct.unpack_from("<BB", data, 8)
    if method_code not in _CODE_METHODS:
        raise TuckerFormatError(f"{path}: unknown method code {method_code} at byte 8")
    if d < 2:
        raise TuckerFormatError(f"{path}: mode count {d} at byte 9 must be >= 2")
    header_end = 10 + d + 8 * d
    if len(data) < header_end:
        raise TuckerFormatError(
            f"{path}: truncated header at byte {len(data)}, need {header_end} bytes"
        )
    order = struct.unpack_from(f"<{d}B", data, 10)
    if sorted(order) != list(range(d)):
        raise TuckerFormatError(f"{path}: processing order {order} at byte 10 is not a permutation")
    dims = struct.unpack_from(f"<{d}I", data, 10 + d)
    rank = struct.unpack_from(f"<{d}I", data, 10 + 5 * d)
    for i, (r, n) in enumerate(zip(rank, dims)):
        if n < 1 or not 1 <= r <= n:
            raise TuckerFormatError(
                f"{path}: rank {r} invalid for dim {n} (mode {i}) at byte {10 + 5 * d + 4 * i}"
            )
    payload = header_end + 8 * (sum(n * r for n, r in zip(dims, rank)) + math.prod(rank))
    if len(data) != payload:
        raise TuckerFormatError(
            f"{path}: payload size mismatch at byte {header_end}: "
            f"expected {payload} total bytes, found {len(data)}"
        )
    offset = header_end
    factors = []
    for n, r in zip(dims, rank):
        count = n * r
        block = np.frombuffer(data, dtype="<f8", count=count, offset=offset)
        factors.append(block.reshape(n, r).astype(np.float64))
        offset += 8 * count
    core = np.frombuffer(data, dtype="<f8", count=math.prod(rank), offset=offset)
    return TuckerFactors(
        core=core.reshape(rank).astype(np.float64),
        factors=factors,
        method=_CODE_METHODS[method_code],
        processing_order=tuple(order),
    )
