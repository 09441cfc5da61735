"""Batch pipeline CLI: compress band stacks, derive NDVI, index, compare.

Subcommands
-----------
compress   band pair -> Tucker container per (image, rank) + storage report
ndvi       raw NDVI per image, plus NDVI from each compressed container
index      Rao or Renyi map (+ JSON sidecar with parameters) per NDVI raster
compare    per-rank error records/statistics of approximated vs raw index maps
report     aggregate the per-rank comparison statistics into one table

A TOML config file drives a run; command-line flags override single keys.
Image and output paths in the config resolve relative to the config file.
Per-item failures are collected and reported, the batch continues; the exit
code is 0 only when no item failed. All outputs are written atomically and
deterministically, so re-running with unchanged inputs reproduces every file
byte for byte.

Config keys::

    out = "runs/demo"            # output directory
    layout = "red-dup"           # or "nir-dup"
    method = "t"                 # or "st"
    ranks = [[10, 10, 2], [50, 50, 2]]
    index = "rao"                # or "renyi"
    alpha = 2.0                  # renyi order
    base = 2.718281828459045     # renyi logarithm base
    distance = "euclidean"       # rao distance name
    window = 11                  # odd window side
    border = "interior"          # or "shrink"
    threads = 0                  # 0 = one worker per CPU

    [[images]]
    id = "jan2018"
    red = "data/jan2018_red.ras"  # .ras (RAS1) or .csv
    nir = "data/jan2018_nir.ras"
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from ._util import atomic_write_text
from .analysis import emit_report, map_error, summarize
from .biodiv import Border, IndexMap, WindowSpec, rao_q, renyi
from .hosvd import Method, read_tucker, reconstruct, st_hosvd, storage_cost, t_hosvd, write_tucker
from .raster import BandStack, Layout, extract_bands, ndvi, read_csv, read_raster, stack_bands, write_raster

DEFAULT_RANK_BASES = (10, 50, 100, 500, 1000)

_METHOD_ALIASES = {"t": Method.T_HOSVD, "st": Method.ST_HOSVD,
                   "t-hosvd": Method.T_HOSVD, "st-hosvd": Method.ST_HOSVD}
_METHOD_TAGS = {Method.T_HOSVD: "t", Method.ST_HOSVD: "st"}


@dataclass
class ImageInput:
    image_id: str
    red: Path
    nir: Path


@dataclass
class PipelineConfig:
    images: list[ImageInput] = field(default_factory=list)
    out: Path = Path("specdiv-out")
    layout: Layout = Layout.RED_DUP
    method: Method = Method.T_HOSVD
    ranks: list[tuple[int, int, int]] = field(
        default_factory=lambda: [(b, b, 2) for b in DEFAULT_RANK_BASES]
    )
    window: WindowSpec = field(default_factory=WindowSpec)
    index: str = "rao"
    alpha: float = 2.0
    base: float = math.e
    distance: str = "euclidean"
    threads: int = 0


def _parse_method(text) -> Method:
    try:
        return _METHOD_ALIASES[str(text).lower()]
    except KeyError:
        raise ValueError(f"unknown method {text!r}; use 't' or 'st'") from None


def _parse_rank(value) -> tuple[int, int, int]:
    if isinstance(value, str):
        parts = value.split(",")
    else:
        parts = list(value)
    if len(parts) != 3:
        raise ValueError(f"rank must have 3 components, got {value!r}")
    return tuple(int(p) for p in parts)


def validate_ranks(ranks) -> list[str]:
    """Hard-check third components (must be <= 3); warn when not the usual 2."""
    notes = []
    for rank in ranks:
        if any(r < 1 for r in rank):
            raise ValueError(f"rank {rank} has nonpositive components")
        if rank[2] > 3:
            raise ValueError(f"rank {rank}: third component must be <= 3 for 3-slice stacks")
        if rank[2] != 2:
            notes.append(f"rank {rank}: third component is usually 2 for duplicated-band stacks")
    return notes


def load_config(path) -> PipelineConfig:
    path = Path(path)
    with path.open("rb") as handle:
        raw = tomllib.load(handle)
    base_dir = path.parent
    cfg = PipelineConfig()
    if "out" in raw:
        cfg.out = base_dir / raw["out"]
    if "layout" in raw:
        cfg.layout = Layout(raw["layout"])
    if "method" in raw:
        cfg.method = _parse_method(raw["method"])
    if "ranks" in raw:
        cfg.ranks = [_parse_rank(r) for r in raw["ranks"]]
    if "window" in raw or "border" in raw:
        cfg.window = WindowSpec(side=raw.get("window", 11), border=Border(raw.get("border", "interior")))
    if "index" in raw:
        if raw["index"] not in ("rao", "renyi"):
            raise ValueError(f"unknown index {raw['index']!r}")
        cfg.index = raw["index"]
    for key in ("alpha", "base"):
        if key in raw:
            setattr(cfg, key, float(raw[key]))
    if "distance" in raw:
        cfg.distance = str(raw["distance"])
    if "threads" in raw:
        cfg.threads = int(raw["threads"])
    for pos, img in enumerate(raw.get("images", [])):
        if "red" not in img or "nir" not in img:
            raise ValueError(f"images entry {pos}: both 'red' and 'nir' paths are required")
        red = base_dir / img["red"]
        nir = base_dir / img["nir"]
        cfg.images.append(ImageInput(image_id=str(img.get("id", Path(img["red"]).stem)),
                                     red=red, nir=nir))
    return cfg


def _apply_overrides(cfg: PipelineConfig, args) -> None:
    if args.out is not None:
        cfg.out = Path(args.out)
    if args.layout is not None:
        cfg.layout = Layout(args.layout)
    if args.method is not None:
        cfg.method = _parse_method(args.method)
    if args.rank:
        cfg.ranks = [_parse_rank(r) for r in args.rank]
    if args.window is not None or args.border is not None:
        cfg.window = WindowSpec(
            side=args.window if args.window is not None else cfg.window.side,
            border=Border(args.border) if args.border is not None else cfg.window.border,
        )
    if args.index is not None:
        cfg.index = args.index
    if args.alpha is not None:
        cfg.alpha = args.alpha
    if args.base is not None:
        cfg.base = args.base
    if args.distance is not None:
        cfg.distance = args.distance
    if args.threads is not None:
        cfg.threads = args.threads


def _read_band(path: Path):
    if path.suffix.lower() == ".csv":
        return read_csv(path)
    return read_raster(path)


def _rank_tag(rank) -> str:
    return "r{}x{}x{}".format(*rank)


def _tuck_path(cfg, image_id, rank) -> Path:
    return cfg.out / f"{image_id}_{_METHOD_TAGS[cfg.method]}_{_rank_tag(rank)}.tuck"


def _ndvi_path(cfg, image_id) -> Path:
    return cfg.out / f"{image_id}_ndvi.ras"


def _approx_ndvi_path(cfg, image_id, rank) -> Path:
    return cfg.out / f"{image_id}_{_METHOD_TAGS[cfg.method]}_{_rank_tag(rank)}_ndvi.ras"


def _index_paths(ndvi_path: Path, index: str) -> tuple[Path, Path]:
    stem = ndvi_path.with_suffix("").name
    base = ndvi_path.parent / f"{stem}_{index}"
    return base.with_suffix(".ras"), base.with_suffix(".meta.json")


def _compare_base(cfg, rank) -> Path:
    return cfg.out / f"compare_{cfg.index}_{_METHOD_TAGS[cfg.method]}_{_rank_tag(rank)}"


def cmd_compress(cfg: PipelineConfig) -> list[str]:
    """Decompose every (image, rank) pair and write the storage report."""
    errors = []
    cfg.out.mkdir(parents=True, exist_ok=True)
    rows = []
    for img in cfg.images:
        try:
            red = _read_band(img.red)
            nir = _read_band(img.nir)
            stack = stack_bands(red, nir, cfg.layout)
        except Exception as exc:
            errors.append(f"{img.image_id}: {exc}")
            continue
        dims = stack.tensor.shape
        for rank in cfg.ranks:
            try:
                if rank[0] > dims[0] or rank[1] > dims[1]:
                    raise ValueError(f"rank {rank} exceeds raster dims {dims[:2]}")
                if cfg.method is Method.T_HOSVD:
                    factors = t_hosvd(stack.tensor, rank)
                else:
                    factors = st_hosvd(stack.tensor, rank)
                write_tucker(factors, _tuck_path(cfg, img.image_id, rank))
                cost = storage_cost(dims, rank,
                                    relative_denominator=dims[0] * dims[1] * 2,
                                    absolute_denominator=dims[0] * dims[1] * 3)
                rows.append({
                    "image_id": img.image_id,
                    "rank": list(rank),
                    "units": cost.units,
                    "relative_ratio": cost.relative_ratio,
                    "absolute_ratio": cost.absolute_ratio,
                    "degenerate": cost.degenerate,
                })
            except Exception as exc:
                errors.append(f"{img.image_id} rank {rank}: {exc}")
    atomic_write_text(cfg.out / "storage_report.json",
                      json.dumps({"method": cfg.method.value, "layout": cfg.layout.value,
                                  "rows": rows}, indent=2) + "\n")
    return errors


def cmd_ndvi(cfg: PipelineConfig) -> list[str]:
    """Write the raw NDVI per image plus one NDVI per compressed container."""
    errors = []
    cfg.out.mkdir(parents=True, exist_ok=True)
    for img in cfg.images:
        try:
            red = _read_band(img.red)
            nir = _read_band(img.nir)
            write_raster(ndvi(red, nir), _ndvi_path(cfg, img.image_id))
        except Exception as exc:
            errors.append(f"{img.image_id}: {exc}")
            continue
        for rank in cfg.ranks:
            tuck = _tuck_path(cfg, img.image_id, rank)
            try:
                factors = read_tucker(tuck)
                stack = BandStack(tensor=reconstruct(factors), layout=cfg.layout)
                approx_red, approx_nir = extract_bands(stack)
                write_raster(ndvi(approx_red, approx_nir),
                             _approx_ndvi_path(cfg, img.image_id, rank))
            except Exception as exc:
                errors.append(f"{img.image_id} rank {rank}: {exc}")
    return errors


def _compute_index(cfg: PipelineConfig, raster) -> IndexMap:
    if cfg.index == "rao":
        return rao_q(raster, cfg.window, distance=cfg.distance, threads=cfg.threads)
    return renyi(raster, cfg.window, alpha=cfg.alpha, base=cfg.base, threads=cfg.threads)


def cmd_index(cfg: PipelineConfig) -> list[str]:
    """Compute the configured index over every NDVI raster of the run."""
    errors = []
    cfg.out.mkdir(parents=True, exist_ok=True)
    targets = []
    for img in cfg.images:
        targets.append(_ndvi_path(cfg, img.image_id))
        targets.extend(_approx_ndvi_path(cfg, img.image_id, rank) for rank in cfg.ranks)
    for ndvi_file in targets:
        try:
            if not ndvi_file.exists():
                raise FileNotFoundError(f"missing NDVI raster {ndvi_file}")
            index_map = _compute_index(cfg, read_raster(ndvi_file))
            map_path, meta_path = _index_paths(ndvi_file, cfg.index)
            write_raster(index_map.raster, map_path)
            atomic_write_text(meta_path, json.dumps(index_map.meta, indent=2) + "\n")
        except Exception as exc:
            errors.append(f"{ndvi_file.name}: {exc}")
    return errors


def _load_index_map(map_path: Path, meta_path: Path) -> IndexMap:
    raster = read_raster(map_path)
    with meta_path.open() as handle:
        meta = json.load(handle)
    return IndexMap(raster=raster, meta=meta)


def cmd_compare(cfg: PipelineConfig) -> list[str]:
    """Per rank: error records of approximated vs raw index maps, JSON + CSV."""
    errors = []
    cfg.out.mkdir(parents=True, exist_ok=True)
    for rank in cfg.ranks:
        records = []
        for img in cfg.images:
            base_map, base_meta = _index_paths(_ndvi_path(cfg, img.image_id), cfg.index)
            approx_map, approx_meta = _index_paths(
                _approx_ndvi_path(cfg, img.image_id, rank), cfg.index)
            try:
                baseline = _load_index_map(base_map, base_meta)
                approx = _load_index_map(approx_map, approx_meta)
            except Exception as exc:
                errors.append(f"{img.image_id} rank {rank}: {exc}")
                continue
            try:
                records.append(map_error(baseline, approx, image_id=img.image_id))
            except ValueError as exc:
                errors.append(f"{base_map.name} vs {approx_map.name}: {exc}")
        if not records:
            errors.append(f"rank {rank}: no comparable map pairs")
            continue
        stats = summarize(records)
        base = _compare_base(cfg, rank)
        emit_report(stats, records, base.with_suffix(".json"), fmt="json")
        emit_report(stats, records, base.with_suffix(".csv"), fmt="csv")
    return errors


def cmd_report(cfg: PipelineConfig) -> list[str]:
    """Aggregate the per-rank comparison statistics into a single table."""
    errors = []
    rows = []
    for rank in cfg.ranks:
        path = _compare_base(cfg, rank).with_suffix(".json")
        if not path.exists():
            errors.append(f"rank {rank}: missing comparison report {path.name}")
            continue
        with path.open() as handle:
            payload = json.load(handle)
        rows.append({"rank": list(rank), **payload["stats"]})
    if not rows:
        errors.append("no comparison reports found; run `compare` first")
        return errors
    tag = f"{cfg.index}_{_METHOD_TAGS[cfg.method]}"
    atomic_write_text(cfg.out / f"report_{tag}.json",
                      json.dumps({"index": cfg.index, "method": cfg.method.value,
                                  "rows": rows}, indent=2) + "\n")
    lines = ["rank,mean_e,mean_ep,var_e,var_ep,min_ep,max_ep,n"]
    for row in rows:
        lines.append(",".join([
            "x".join(str(r) for r in row["rank"]),
            repr(row["mean_e"]), repr(row["mean_ep"]), repr(row["var_e"]),
            repr(row["var_ep"]), repr(row["min_ep"]), repr(row["max_ep"]), str(row["n"]),
        ]))
    atomic_write_text(cfg.out / f"report_{tag}.csv", "\n".join(lines) + "\n")
    return errors


_COMMANDS = {
    "compress": cmd_compress,
    "ndvi": cmd_ndvi,
    "index": cmd_index,
    "compare": cmd_compare,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="specdiv", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("--config", type=Path, help="TOML config file")
        p.add_argument("--rank", action="append",
                       help="rank as 'r1,r2,r3'; repeatable, overrides config ranks")
        p.add_argument("--method", choices=["t", "st"])
        p.add_argument("--layout", choices=[Layout.RED_DUP.value, Layout.NIR_DUP.value])
        p.add_argument("--index", choices=["rao", "renyi"])
        p.add_argument("--alpha", type=float)
        p.add_argument("--base", type=float)
        p.add_argument("--distance")
        p.add_argument("--window", type=int, help="odd window side")
        p.add_argument("--border", choices=[b.value for b in Border])
        p.add_argument("--threads", type=int, help="worker threads (0 = auto)")
        p.add_argument("--out", type=Path, help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else PipelineConfig()
        _apply_overrides(cfg, args)
        for note in validate_ranks(cfg.ranks):
            print(f"warning: {note}", file=sys.stderr)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.command != "report" and not cfg.images:
        print("error: no images configured; pass --config with an [[images]] table",
              file=sys.stderr)
        return 2
    errors = _COMMANDS[args.command](cfg)
    for err in errors:
        print(f"error: {err}", file=sys.stderr)
    print(f"{args.command}: {len(errors)} error(s)")
    return 0 if not errors else 1


if __name__ == "__main__":
    sys.exit(main())
