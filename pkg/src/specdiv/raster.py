"""Raster bands, NDVI derivation and band-stack construction.

A :class:`Raster` is a 2-D grid of double-precision values with a nodata
sentinel (default -3000, the conventional fill value of the source imagery).
Band stacks are rows x cols x 3 tensors; the third slice count is fixed at 3
so that every mode of the stacked tensor supports a rank-2 truncation, which
a plain two-band stack would not. The duplication layouts place the bands so
that slice 2 always holds RED and slice 3 always holds NIR (1-based), and
extraction reads exactly those two positions regardless of layout.

RAS1 binary container (little-endian, no padding)::

    offset 0   magic   4 bytes  b"RAS1"
    offset 4   rows    u32
    offset 8   cols    u32
    offset 12  dtype   u8       1 = int16, 2 = float64
    offset 13  nodata  f64
    offset 21  payload rows*cols values, row-major

CSV rasters are plain comma-separated rows, optionally preceded by a header
line ``# nodata=<value>``.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._util import atomic_write_bytes, atomic_write_text

__all__ = [
    "NODATA",
    "Raster",
    "RasterFormatError",
    "Layout",
    "BandStack",
    "ndvi",
    "stack_bands",
    "extract_bands",
    "write_raster",
    "read_raster",
    "write_csv",
    "read_csv",
]

NODATA = -3000.0

_HEADER_SIZE = 21
_DTYPE_CODES = {"int16": 1, "float64": 2}


class RasterFormatError(ValueError):
    """Raised when a RAS1 file cannot be parsed."""


@dataclass
class Raster:
    """2-D grid of values with a nodata sentinel."""

    values: np.ndarray
    nodata: float = NODATA

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.size == 0:
            raise ValueError(f"raster values must be a nonempty 2-D array, got shape {self.values.shape}")
        self.nodata = float(self.nodata)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    def valid_mask(self) -> np.ndarray:
        return self.values != self.nodata


class Layout(enum.Enum):
    """Slice assignment of a 3-slice band stack (1-based positions).

    RED_DUP: slices (RED, RED, NIR). NIR_DUP: slices (NIR, RED, NIR).
    NDVI_RED_NIR: slices (NDVI, RED, NIR), with NDVI derived on the fly.
    """

    RED_DUP = "red-dup"
    NIR_DUP = "nir-dup"
    NDVI_RED_NIR = "ndvi-red-nir"


@dataclass
class BandStack:
    """rows x cols x 3 tensor of band values plus its layout tag."""

    tensor: np.ndarray
    layout: Layout
    nodata: float = NODATA

    def __post_init__(self):
        self.tensor = np.ascontiguousarray(self.tensor, dtype=np.float64)
        if self.tensor.ndim != 3 or self.tensor.shape[2] != 3:
            raise ValueError(f"band stack must be rows x cols x 3, got shape {self.tensor.shape}")


def _check_same_shape(red: Raster, nir: Raster) -> None:
    if red.values.shape != nir.values.shape:
        raise ValueError(
            f"band shape mismatch: red is {red.values.shape}, nir is {nir.values.shape}"
        )


def ndvi(red: Raster, nir: Raster, missing: float = NODATA) -> Raster:
    """Normalized difference vegetation index, ``(nir - red) / (nir + red)``.

    Cells where the band sum is zero get ``missing``, as do cells where
    either input equals its own nodata sentinel (fill values would otherwise
    produce meaningless ratios). For nonnegative bands every computed value
    lies in [-1, 1].
    """
    _check_same_shape(red, nir)
    r, n = red.values, nir.values
    total = n + r
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (n - r) / total
    bad = (total == 0.0) | ~red.valid_mask() | ~nir.valid_mask()
    out[bad] = missing
    return Raster(out, nodata=float(missing))


def stack_bands(red: Raster, nir: Raster, layout: Layout | str) -> BandStack:
    """Assemble the rows x cols x 3 tensor for ``layout``.

    Values are stacked raw, sentinels included; compression downstream sees
    the bands exactly as stored.
    """
    _check_same_shape(red, nir)
    layout = Layout(layout)
    t = np.empty((red.rows, red.cols, 3), dtype=np.float64)
    if layout is Layout.RED_DUP:
        t[:, :, 0] = red.values
        t[:, :, 1] = red.values
        t[:, :, 2] = nir.values
    elif layout is Layout.NIR_DUP:
        t[:, :, 0] = nir.values
        t[:, :, 1] = red.values
        t[:, :, 2] = nir.values
    else:
        t[:, :, 0] = ndvi(red, nir, missing=red.nodata).values
        t[:, :, 1] = red.values
        t[:, :, 2] = nir.values
    return BandStack(tensor=t, layout=layout, nodata=red.nodata)


def extract_bands(stack: BandStack) -> tuple[Raster, Raster]:
    """Return the ``(red, nir)`` slices of ``stack``.

    Every layout keeps RED in slice 2 and NIR in slice 3 (1-based), so the
    read is layout-independent. After lossy compression the two copies of a
    duplicated band differ; these fixed positions are the ones used.
    """
    red = Raster(stack.tensor[:, :, 1].copy(), nodata=stack.nodata)
    nir = Raster(stack.tensor[:, :, 2].copy(), nodata=stack.nodata)
    return red, nir


def write_raster(raster: Raster, path, dtype: str = "float64") -> None:
    """Write ``raster`` to a RAS1 file (atomic). ``dtype``: "float64" or "int16"."""
    if dtype not in _DTYPE_CODES:
        raise ValueError(f"unsupported dtype {dtype!r}, expected one of {sorted(_DTYPE_CODES)}")
    v = raster.values
    if dtype == "int16":
        if not np.all(np.isfinite(v)) or np.any(v != np.trunc(v)) or v.min() < -32768 or v.max() > 32767:
            raise ValueError("raster values are not representable as int16")
        payload = v.astype("<i2").tobytes()
    else:
        payload = np.ascontiguousarray(v, dtype="<f8").tobytes()
    header = b"RAS1" + struct.pack(
        "<IIBd", raster.rows, raster.cols, _DTYPE_CODES[dtype], raster.nodata
    )
    atomic_write_bytes(path, header + payload)


def read_raster(path) -> Raster:
    """Read a RAS1 file; raises :class:`RasterFormatError` on damage."""
    data = Path(path).read_bytes()
    if len(data) < 4 or data[:4] != b"RAS1":
        raise RasterFormatError(f"{path}: bad magic at byte 0, expected b'RAS1'")
    if len(data) < _HEADER_SIZE:
        raise RasterFormatError(
            f"{path}: truncated header at byte {len(data)}, need {_HEADER_SIZE} bytes"
        )
    rows, cols, code = struct.unpack_from("<IIB", data, 4)
    if rows < 1 or cols < 1:
        raise RasterFormatError(f"{path}: invalid dimensions {rows}x{cols} at byte 4")
    if code == 1:
        np_dtype, itemsize = "<i2", 2
    elif code == 2:
        np_dtype, itemsize = "<f8", 8
    else:
        raise RasterFormatError(f"{path}: unknown dtype code {code} at byte 12")
    nodata = struct.unpack_from("<d", data, 13)[0]
    expected = rows * cols * itemsize
    found = len(data) - _HEADER_SIZE
    if found != expected:
        raise RasterFormatError(
            f"{path}: payload size mismatch at byte {_HEADER_SIZE}: "
            f"expected {expected} bytes, found {found}"
        )
    values = np.frombuffer(data, dtype=np_dtype, count=rows * cols, offset=_HEADER_SIZE)
    return Raster(values.astype(np.float64).reshape(rows, cols), nodata=nodata)


def write_csv(raster: Raster, path) -> None:
    """Write ``raster`` as comma-separated rows with a ``# nodata=`` header."""
    lines = [f"# nodata={raster.nodata!r}"]
    for row in raster.values:
        lines.append(",".join(repr(float(x)) for x in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_csv(path, nodata: float = NODATA) -> Raster:
    """Read a CSV raster; the ``# nodata=`` header overrides ``nodata``."""
    path = Path(path)
    with path.open() as handle:
        first = handle.readline()
    if first.startswith("#"):
        key, _, value = first[1:].partition("=")
        if key.strip() != "nodata":
            raise ValueError(f"{path}: unrecognized header line {first.strip()!r}")
        nodata = float(value)
    values = np.loadtxt(path, delimiter=",", comments="#", ndmin=2, dtype=np.float64)
    return Raster(values, nodata=nodata)
