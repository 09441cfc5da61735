"""Error metrics between index maps and their summary statistics.

Two maps are compared over the cells valid (non-missing) in both; cells
missing in either map are excluded from the norm and counted. The per-pixel
error divides the Frobenius error by the shared-valid cell count (default)
or, optionally, by the full raster size.
"""

from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from ._util import atomic_write_text
from .biodiv import IndexMap

__all__ = ["ErrorRecord", "ErrorStats", "map_error", "summarize", "emit_report"]

CSV_COLUMNS = ["image_id", "frobenius_error", "per_pixel_error", "valid_pixels", "excluded_pixels"]


@dataclass(frozen=True)
class ErrorRecord:
    """Frobenius and per-pixel error of one map pair."""

    image_id: str
    frobenius_error: float
    per_pixel_error: float
    valid_pixels: int
    excluded_pixels: int


@dataclass(frozen=True)
class ErrorStats:
    """Means, unbiased variances and per-pixel extrema over a record batch."""

    mean_e: float
    mean_ep: float
    var_e: float
    var_ep: float
    min_ep: float
    max_ep: float
    n: int


def map_error(a: IndexMap, b: IndexMap, image_id: str = "",
              denominator: str = "valid") -> ErrorRecord:
    """Error between two index maps of identical dims and window specs.

    ``denominator`` selects the per-pixel divisor: "valid" for the
    shared-valid cell count, "all" for the full raster size.
    """
    if a.raster.values.shape != b.raster.values.shape:
        raise ValueError(
            f"map shape mismatch: {a.raster.values.shape} vs {b.raster.values.shape}"
        )
    for key in ("side", "border"):
        if a.meta.get(key) != b.meta.get(key):
            raise ValueError(
                f"window spec mismatch on {key!r}: {a.meta.get(key)!r} vs {b.meta.get(key)!r}"
            )
    if denominator not in ("valid", "all"):
        raise ValueError(f"denominator must be 'valid' or 'all', got {denominator!r}")
    both = a.raster.valid_mask() & b.raster.valid_mask()
    valid = int(both.sum())
    diff = a.raster.values[both] - b.raster.values[both]
    frob = float(np.linalg.norm(diff))
    denom = valid if denominator == "valid" else a.raster.values.size
    per_pixel = frob / denom if denom > 0 else 0.0
    return ErrorRecord(
        image_id=image_id,
        frobenius_error=frob,
        per_pixel_error=per_pixel,
        valid_pixels=valid,
        excluded_pixels=int(a.raster.values.size - valid),
    )


def summarize(records) -> ErrorStats:
    """Means, unbiased (n-1) variances and per-pixel min/max of a batch.

    Reductions run over sorted values, so the result is independent of the
    record order down to the last bit.
    """
    records = list(records)
    if not records:
        raise ValueError("cannot summarize an empty record list")
    e = np.sort(np.array([r.frobenius_error for r in records], dtype=np.float64))
    ep = np.sort(np.array([r.per_pixel_error for r in records], dtype=np.float64))
    if len(records) == 1:
        warnings.warn("variance of a single record is reported as 0", stacklevel=2)
        var_e = var_ep = 0.0
    else:
        var_e = float(np.var(e, ddof=1))
        var_ep = float(np.var(ep, ddof=1))
    return ErrorStats(
        mean_e=float(e.mean()),
        mean_ep=float(ep.mean()),
        var_e=var_e,
        var_ep=var_ep,
        min_ep=float(ep.min()),
        max_ep=float(ep.max()),
        n=len(records),
    )


def emit_report(stats: ErrorStats, records, path, fmt: str = "json") -> None:
    """Write a report (atomic): JSON holds stats and records, CSV the records.

    JSON numbers keep full double precision (repr serialization). CSV columns
    are fixed: image_id, frobenius_error, per_pixel_error, valid_pixels,
    excluded_pixels.
    """
    fmt = fmt.lower()
    if fmt not in ("json", "csv"):
        raise ValueError(f"format must be 'json' or 'csv', got {fmt!r}")
    records = list(records)
    try:
        if fmt == "json":
            payload = {"stats": asdict(stats), "records": [asdict(r) for r in records]}
            atomic_write_text(path, json.dumps(payload, indent=2) + "\n")
        else:
            buf = io.StringIO()
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for r in records:
                writer.writerow([r.image_id, repr(r.frobenius_error), repr(r.per_pixel_error),
                                 r.valid_pixels, r.excluded_pixels])
            atomic_write_text(path, buf.getvalue())
    except OSError as exc:
        raise OSError(f"failed to write report to {path}: {exc}") from exc
