"""Moving-window biodiversity indices over rasters.

Both indices scan a square window of odd side across the raster, collect the
distinct values inside it with their frequencies (nodata cells are dropped),
and reduce them to a scalar per center cell:

* Rao's quadratic entropy: ``sum_ij p_i * p_j * d(label_i, label_j)`` for a
  registered symmetric distance with ``d(x, x) = 0``. A window with a single
  distinct value scores 0; an all-nodata window scores the missing sentinel.
* Renyi entropy of order ``alpha``: ``(1 / (1 - alpha)) * log(sum p_i**alpha)
  / log(base)``, with an exact-zero branch when the power sum is 1 and the
  missing sentinel for empty windows.

Border policies: ``INTERIOR_MISSING`` computes only centers whose window lies
fully inside the raster and marks the outer frame missing; ``SHRINK`` clips
the window to the raster so every cell gets a value.

Values are never binned: distinct floating-point values count as distinct
labels. Work is parallelized over rows of window centers; each worker writes
disjoint output rows, so results are independent of the worker count.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .raster import Raster

__all__ = [
    "Border",
    "WindowSpec",
    "AbundanceTable",
    "IndexMap",
    "window_abundances",
    "rao_q",
    "renyi",
    "register_distance",
    "distance_names",
]


class Border(enum.Enum):
    INTERIOR_MISSING = "interior"
    SHRINK = "shrink"


@dataclass(frozen=True)
class WindowSpec:
    """Moving-window configuration: odd side length and border policy."""

    side: int = 11
    border: Border = Border.INTERIOR_MISSING

    def __post_init__(self):
        object.__setattr__(self, "side", int(self.side))
        object.__setattr__(self, "border", Border(self.border))
        if self.side < 3 or self.side % 2 == 0:
            raise ValueError(f"window side must be odd and >= 3, got {self.side}")

    @property
    def half(self) -> int:
        return (self.side - 1) // 2


@dataclass
class AbundanceTable:
    """Distinct non-missing window values (strictly increasing) and their counts."""

    labels: np.ndarray
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass
class IndexMap:
    """Index raster plus the parameters that produced it."""

    raster: Raster
    meta: dict


def _euclidean(a, b):
    return np.abs(a - b)


def _discrete(a, b):
    return (a != b).astype(np.float64)


_DISTANCES = {"euclidean": _euclidean, "discrete": _discrete}


def register_distance(name: str, fn) -> None:
    """Register a distance for :func:`rao_q`.

    ``fn`` must accept two broadcastable arrays and return elementwise
    distances; it must be symmetric with ``fn(x, x) == 0``.
    """
    if not callable(fn):
        raise ValueError(f"distance {name!r} is not callable")
    _DISTANCES[str(name)] = fn


def distance_names() -> list[str]:
    return sorted(_DISTANCES)


def _window_counts(window: np.ndarray, missing: float):
    vals = window.ravel()
    vals = vals[vals != missing]
    return np.unique(vals, return_counts=True)


def window_abundances(raster: Raster, row: int, col: int, spec: WindowSpec) -> AbundanceTable:
    """Abundance table of the window centered at ``(row, col)``.

    Under ``INTERIOR_MISSING`` the center must keep the whole window inside
    the raster; under ``SHRINK`` any in-raster center is accepted and the
    window is clipped.
    """
    row, col = int(row), int(col)
    w = spec.half
    rows, cols = raster.rows, raster.cols
    if spec.border is Border.INTERIOR_MISSING:
        if not (w <= row < rows - w and w <= col < cols - w):
            raise ValueError(
                f"center ({row}, {col}) outside the interior of a {rows}x{cols} raster "
                f"for side {spec.side}"
            )
        window = raster.values[row - w : row + w + 1, col - w : col + w + 1]
    else:
        if not (0 <= row < rows and 0 <= col < cols):
            raise ValueError(f"center ({row}, {col}) outside a {rows}x{cols} raster")
        window = raster.values[max(0, row - w) : row + w + 1, max(0, col - w) : col + w + 1]
    labels, counts = _window_counts(window, raster.nodata)
    return AbundanceTable(labels=labels, counts=counts)


def _compute_map(raster: Raster, spec: WindowSpec, cell_fn, threads: int) -> np.ndarray:
    rows, cols = raster.rows, raster.cols
    w = spec.half
    values = raster.values
    out = np.full((rows, cols), raster.nodata, dtype=np.float64)

    if spec.border is Border.INTERIOR_MISSING:
        if rows < spec.side or cols < spec.side:
            return out
        row_range = range(w, rows - w)

        def work(r):
            for c in range(w, cols - w):
                out[r, c] = cell_fn(values[r - w : r + w + 1, c - w : c + w + 1])

    else:
        row_range = range(rows)

        def work(r):
            r0 = max(0, r - w)
            for c in range(cols):
                out[r, c] = cell_fn(values[r0 : r + w + 1, max(0, c - w) : c + w + 1])

    if threads is None or threads < 1:
        threads = os.cpu_count() or 1
    if threads == 1:
        for r in row_range:
            work(r)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            # Consume the iterator so worker exceptions propagate.
            list(pool.map(work, row_range))
    return out


def rao_q(raster: Raster, spec: WindowSpec | None = None, distance: str = "euclidean",
          threads: int = 1) -> IndexMap:
    """Rao's quadratic entropy per window center.

    ``distance`` names a registered distance ("euclidean" on scalar values,
    i.e. ``|x - y|``, by default). ``threads`` <= 0 means one worker per CPU.
    """
    spec = spec or WindowSpec()
    if distance not in _DISTANCES:
        raise ValueError(f"unknown distance {distance!r}; registered: {distance_names()}")
    fn = _DISTANCES[distance]
    missing = raster.nodata

    def cell(window):
        labels, counts = _window_counts(window, missing)
        if labels.size == 0:
            return missing
        if labels.size == 1:
            return 0.0
        p = counts / counts.sum()
        d = fn(labels[:, None], labels[None, :])
        return float(p @ d @ p)

    out = _compute_map(raster, spec, cell, threads)
    meta = {
        "index": "rao",
        "distance": distance,
        "side": spec.side,
        "border": spec.border.value,
    }
    return IndexMap(raster=Raster(out, nodata=missing), meta=meta)


def renyi(raster: Raster, spec: WindowSpec | None = None, alpha: float = 2.0,
          base: float = math.e, threads: int = 1) -> IndexMap:
    """Renyi entropy of window value frequencies.

    ``alpha`` must be positive and different from 1 (the Shannon limit is not
    implemented); ``base`` is the logarithm base, > 1.
    """
    spec = spec or WindowSpec()
    alpha = float(alpha)
    base = float(base)
    if alpha <= 0.0 or alpha == 1.0:
        raise ValueError(f"alpha must be positive and != 1, got {alpha}")
    if base <= 1.0:
        raise ValueError(f"base must be > 1, got {base}")
    missing = raster.nodata
    log_base = math.log(base)

    def cell(window):
        _, counts = _window_counts(window, missing)
        if counts.size == 0:
            return missing
        p = counts / counts.sum()
        log_sum = math.log(np.sum(p**alpha))
        if log_sum == 0.0:
            return 0.0
        return (1.0 / (1.0 - alpha)) * log_sum / log_base

    out = _compute_map(raster, spec, cell, threads)
    meta = {
        "index": "renyi",
        "alpha": alpha,
        "base": base,
        "side": spec.side,
        "border": spec.border.value,
    }
    return IndexMap(raster=Raster(out, nodata=missing), meta=meta)
