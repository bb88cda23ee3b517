"""Single `logokit` entry point with git-style subcommands.

Every subcommand is a pure function of (config, input files): one --seed
drives all randomness through per-item derivation, and --workers never
changes output bytes.  Options resolve as flags > environment (LOGOKIT_*)
> --config file > defaults, and each run writes a run-record JSON with the
resolved config, a config hash, and input digests.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import traceback
from pathlib import Path
from types import SimpleNamespace

import numpy as np

from . import __version__
from .core import (
    DatasetManifest,
    ImageRecord,
    read_manifest,
    read_registry,
    write_manifest,
)
from .bench import (
    MergeRules,
    SplitPlan,
    compose_training_set,
    compute_stats,
    filter_small_classes,
    ingest,
    merge_and_clean,
    render_stats,
    split,
)
from .evaluation import EvalConfig, evaluate, read_detections, render_report, report_to_json
from .pairgen import ForegroundMask, RandomRectangle, build_pair_set
from .raster import load_image, save_png
from .seeds import derive_rng
from .synth import SynthJob, manifest_from_records, run_synth_job
from .transforms import TransformRanges
from .util import image_dims, iter_image_files, parallel_map, sha256_file

TOOL = "logokit"
ENV_PREFIX = "LOGOKIT_"

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_INTERNAL_ERROR = 2

GLOBAL_DEFAULTS = {"seed": 0, "workers": 1}

# Per-subcommand option defaults; None means required.
DEFAULTS: dict[str, dict] = {}
REQUIRED: dict[str, set[str]] = {}


class InputError(ValueError):
    """Bad flags, config, or input files; maps to exit code 1."""


# --------------------------------------------------------------------------
# Parser construction.  Options parse with SUPPRESS defaults so that config
# file and environment values only fill slots the user left untouched.
# --------------------------------------------------------------------------

def _add(sub: argparse.ArgumentParser, cmd: str, *flags, default=None,
         required: bool = False, **kwargs) -> None:
    action = sub.add_argument(*flags, default=argparse.SUPPRESS, **kwargs)
    DEFAULTS[cmd][action.dest] = default
    if required:
        REQUIRED[cmd].add(action.dest)


def _new_command(subparsers, name: str, help_text: str) -> argparse.ArgumentParser:
    DEFAULTS[name] = {}
    REQUIRED[name] = set()
    sub = subparsers.add_parser(name, help=help_text)
    sub.add_argument("--config", default=argparse.SUPPRESS,
                     help="JSON config file; flags override it")
    sub.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                     help="global seed (default 0)")
    sub.add_argument("--workers", type=int, default=argparse.SUPPRESS,
                     help="parallel workers; never changes outputs (default 1)")
    return sub


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=TOOL,
        description="Synthetic logo training data, benchmark assembly, and evaluation.",
    )
    parser.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")

    sub = _new_command(subparsers, "synth", "composite logo designs onto backgrounds")
    _add(sub, "synth", "--registry", required=True, help="class registry JSON with design paths")
    _add(sub, "synth", "--backgrounds", required=True,
         help="background manifest (.jsonl) or image directory")
    _add(sub, "synth", "--out", required=True, help="output directory")
    _add(sub, "synth", "--per-class", dest="per_class", type=int, default=100,
         help="synthetic images per class (default 100)")
    _add(sub, "synth", "--classes", type=int, default=0,
         help="limit to the first N registry classes (0 = all)")
    _add(sub, "synth", "--area-fraction", dest="area_fraction", type=float, nargs=2,
         default=(0.01, 0.30), help="logo area fraction range of the background")
    _add(sub, "synth", "--rotation", type=float, nargs=2, default=(-25.0, 25.0),
         help="rotation range in degrees")
    _add(sub, "synth", "--no-masks", dest="masks", action="store_false", default=True,
         help="skip writing region masks")

    sub = _new_command(subparsers, "pairs", "build (clean, corrupted, mask) training pairs")
    _add(sub, "pairs", "--non-logo", dest="non_logo", required=True,
         help="non-logo image manifest (.jsonl) or directory")
    _add(sub, "pairs", "--masked", required=True,
         help="segmented image manifest (.jsonl) or directory")
    _add(sub, "pairs", "--regions", required=True,
         help="JSONL region specs: {image_id, polygon|rle|mask}")
    _add(sub, "pairs", "--out", required=True, help="output directory")
    _add(sub, "pairs", "-n", "--per-source", dest="per_source", type=int, default=2,
         help="pairs per source (default 2)")
    _add(sub, "pairs", "--fraction", type=float, nargs=2, default=(0.02, 0.25),
         help="rectangle area fraction range")
    _add(sub, "pairs", "--aspect", type=float, nargs=2, default=(0.5, 2.0),
         help="rectangle aspect (w/h) range")

    sub = _new_command(subparsers, "build", "ingest sources, merge classes, clean, filter")
    _add(sub, "build", "--source", dest="sources", action="append", default=[],
         metavar="FORMAT:PATH[:NAME]",
         help="source dataset, e.g. coco-json:anns.json:flickr (repeatable)")
    _add(sub, "build", "--rules", default=None,
         help="JSON merge rules {canonical: [patterns]}")
    _add(sub, "build", "--registry", default=None, help="existing registry for aliases/flags")
    _add(sub, "build", "--exclude", default=None, help="newline-delimited classes to drop")
    _add(sub, "build", "--min-images", dest="min_images", type=int, default=10,
         help="drop classes with fewer images (default 10)")
    _add(sub, "build", "--out", required=True, help="output manifest path (.jsonl)")
    _add(sub, "build", "--registry-out", dest="registry_out", default=None,
         help="write the merged class registry here")
    _add(sub, "build", "--report-out", dest="report_out", default=None,
         help="write the cleaning/filter report JSON here")

    sub = _new_command(subparsers, "split", "assign train/val/test splits")
    _add(sub, "split", "--manifest", required=True, help="input manifest (.jsonl)")
    _add(sub, "split", "--plan", required=True, choices=["open", "fully-supervised"],
         help="split protocol")
    _add(sub, "split", "--out", required=True, help="output manifest path")
    _add(sub, "split", "--supervised", default=None,
         help="newline-delimited supervised class names (open plan)")
    _add(sub, "split", "--trainval", default=None,
         help="JSON {class: [image ids]} designated train images (open plan)")
    _add(sub, "split", "--trainval-size", dest="trainval_size", type=int, default=40,
         help="expected designated images per supervised class")
    _add(sub, "split", "--val-fraction", dest="val_fraction", type=float, default=0.10)
    _add(sub, "split", "--train-fraction", dest="train_fraction", type=float, default=0.60)
    _add(sub, "split", "--test-fraction", dest="test_fraction", type=float, default=0.30)

    sub = _new_command(subparsers, "stats", "corpus statistics table")
    _add(sub, "stats", "--manifest", required=True, help="input manifest (.jsonl)")
    _add(sub, "stats", "--out", required=True, help="output JSON path")

    sub = _new_command(subparsers, "eval", "evaluate detections against a manifest")
    _add(sub, "eval", "--manifest", required=True, help="ground-truth manifest (.jsonl)")
    _add(sub, "eval", "--detections", required=True,
         help="detections JSONL or whitespace-delimited text")
    _add(sub, "eval", "--out", required=True, help="report JSON path")
    _add(sub, "eval", "--registry", default=None,
         help="registry JSON supplying supervised flags")
    _add(sub, "eval", "--supervised", default=None,
         help="newline-delimited supervised class names (overrides registry)")
    _add(sub, "eval", "--iou", type=float, default=0.5, help="IoU threshold (default 0.5)")
    _add(sub, "eval", "--interpolation", choices=["all-points", "11-point"],
         default="all-points")
    _add(sub, "eval", "--scale-threshold", dest="scale_threshold", type=float, default=0.02,
         help="big/small area-ratio boundary (default 0.02)")
    _add(sub, "eval", "--per-class", dest="per_class", action="store_true", default=False,
         help="print per-class AP lines")

    sub = _new_command(subparsers, "compose", "compose detector training manifests")
    _add(sub, "compose", "--manifest", required=True, help="real manifest with a train split")
    _add(sub, "compose", "--synth", required=True, help="synthetic manifest (.jsonl)")
    _add(sub, "compose", "--mode", required=True, choices=["mixed", "sequential"])
    _add(sub, "compose", "--out", required=True, help="output directory")

    sub = _new_command(subparsers, "preview", "render images with burned-in boxes")
    _add(sub, "preview", "--manifest", required=True, help="input manifest (.jsonl)")
    _add(sub, "preview", "-n", dest="n", type=int, default=8, help="images to render")
    _add(sub, "preview", "--out", required=True, help="output directory")

    return parser


# --------------------------------------------------------------------------
# Config resolution and run records.
# --------------------------------------------------------------------------

def _load_config_file(path: str, command: str) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputError(f"config {path} must be a JSON object")
    for key in doc:
        if key in GLOBAL_DEFAULTS or key in DEFAULTS:
            continue
        raise InputError(f"config {path}: unknown key {key!r}")
    section = doc.get(command, {})
    if not isinstance(section, dict):
        raise InputError(f"config {path}: section {command!r} must be an object")
    for key in section:
        if key not in DEFAULTS[command]:
            raise InputError(f"config {path}: unknown {command} option {key!r}")
    return doc


def resolve_options(command: str, ns: argparse.Namespace) -> SimpleNamespace:
    provided = {k: v for k, v in vars(ns).items() if k != "command"}
    config_path = provided.pop("config", None) or os.environ.get(ENV_PREFIX + "CONFIG")

    resolved = dict(GLOBAL_DEFAULTS) | dict(DEFAULTS[command])
    if config_path:
        doc = _load_config_file(config_path, command)
        for key in GLOBAL_DEFAULTS:
            if key in doc:
                resolved[key] = doc[key]
        resolved.update(doc.get(command, {}))
    for key in GLOBAL_DEFAULTS:
        env = os.environ.get(ENV_PREFIX + key.upper())
        if env is not None:
            try:
                resolved[key] = int(env)
            except ValueError as exc:
                raise InputError(f"{ENV_PREFIX}{key.upper()} must be an integer") from exc
    resolved.update(provided)

    missing = sorted(k for k in REQUIRED[command] if resolved.get(k) is None)
    if missing:
        flags = ", ".join("--" + k.replace("_", "-") for k in missing)
        raise InputError(f"{command}: missing required options: {flags}")
    return SimpleNamespace(**resolved)


def _jsonable(value):
    if isinstance(value, tuple):
        return list(value)
    return value


def write_run_record(command: str, opts: SimpleNamespace, inputs: list[str | Path],
                     record_path: str | Path) -> None:
    # The worker count is deliberately absent: outputs are a pure function of
    # (config, inputs) at any parallelism, and recording it would break the
    # byte-identical-tree guarantee across worker counts.
    section = {
        k: _jsonable(v) for k, v in sorted(vars(opts).items())
        if k not in GLOBAL_DEFAULTS
    }
    config = {"seed": opts.seed, command: section}
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    digests = {}
    for item in inputs:
        p = Path(item)
        if p.is_file():
            digests[str(item)] = sha256_file(p)
        elif p.is_dir():
            files = sorted(str(f.relative_to(p)) for f in p.rglob("*") if f.is_file())
            digests[str(item)] = "dir:" + hashlib.sha256(
                "\n".join(files).encode()).hexdigest()[:16]
    record = {
        "tool": TOOL,
        "version": __version__,
        "command": command,
        "seed": opts.seed,
        "config": config,
        "config_hash": hashlib.sha256(blob.encode()).hexdigest(),
        "inputs": digests,
    }
    record_path = Path(record_path)
    record_path.parent.mkdir(parents=True, exist_ok=True)
    record_path.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n",
                           encoding="utf-8")


# --------------------------------------------------------------------------
# Shared input helpers.
# --------------------------------------------------------------------------

def _image_pool(path_str: str) -> list[tuple[str, str]]:
    """(id, path) pairs from a manifest .jsonl or an image directory."""
    path = Path(path_str)
    if path.is_dir():
        files = iter_image_files(path)
        if not files:
            raise InputError(f"no images found in {path}")
        return [(f.stem, str(f)) for f in files]
    if not path.exists():
        raise InputError(f"input {path} does not exist")
    manifest = read_manifest(path)
    base = path.parent
    pool = []
    for image_id in sorted(manifest.images):
        rec = manifest.images[image_id]
        rec_path = Path(rec.path)
        pool.append((image_id, str(rec_path if rec_path.is_absolute() else base / rec_path)))
    return pool


def _pool_manifest(pool: list[tuple[str, str]], source: str) -> DatasetManifest:
    manifest = DatasetManifest()
    for image_id, path in pool:
        width, height = image_dims(path)
        manifest.images[image_id] = ImageRecord(
            id=image_id, path=path, width=width, height=height, source=source,
        )
    return manifest


def _read_lines(path: str) -> list[str]:
    return [
        line.strip()
        for line in Path(path).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]


def _read_regions(path: str) -> dict[str, ForegroundMask]:
    regions = {}
    base = Path(path).parent
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not raw.strip():
            continue
        row = json.loads(raw)
        image_id = str(row.get("image_id", ""))
        if not image_id:
            raise InputError(f"{path} line {lineno}: missing image_id")
        if "polygon" in row:
            regions[image_id] = ForegroundMask(
                polygon=tuple((float(x), float(y)) for x, y in row["polygon"]))
        elif "rle" in row:
            regions[image_id] = ForegroundMask(rle=row["rle"])
        elif "mask" in row:
            mask_path = Path(row["mask"])
            if not mask_path.is_absolute():
                mask_path = base / mask_path
            regions[image_id] = ForegroundMask(mask_path=str(mask_path))
        else:
            raise InputError(f"{path} line {lineno}: need polygon, rle, or mask")
    return regions


# --------------------------------------------------------------------------
# Subcommands.
# --------------------------------------------------------------------------

def cmd_synth(opts: SimpleNamespace) -> int:
    registry = read_registry(opts.registry)
    classes = registry.classes
    if opts.classes:
        classes = classes[:opts.classes]
    for cls in classes:
        if not cls.design_path:
            raise InputError(f"class {cls.name!r} has no design image path")

    pool = _image_pool(opts.backgrounds)
    backgrounds = tuple(pool)
    registry_dir = Path(opts.registry).parent
    ranges = TransformRanges(
        area_fraction=tuple(opts.area_fraction),
        rotation_deg=tuple(opts.rotation),
    )

    jobs = []
    for cls in classes:
        design_path = Path(cls.design_path)
        if not design_path.is_absolute():
            design_path = registry_dir / design_path
        for index in range(opts.per_class):
            jobs.append(SynthJob(
                class_name=cls.name,
                index=index,
                design_path=str(design_path),
                backgrounds=backgrounds,
                seed=opts.seed,
                ranges=ranges,
                out_dir=opts.out,
                emit_mask=opts.masks,
            ))
    records = parallel_map(run_synth_job, jobs, opts.workers)

    dims = {bg_id: image_dims(path) for bg_id, path in pool}
    manifest = manifest_from_records(records, dims)
    out_dir = Path(opts.out)
    write_manifest(manifest, out_dir / "manifest.jsonl")
    write_run_record("synth", opts, [opts.registry, opts.backgrounds],
                     out_dir / "run_record.json")
    print(f"synth: {len(records)} images over {len(classes)} classes -> {out_dir}")
    return EXIT_OK


def cmd_pairs(opts: SimpleNamespace) -> int:
    non_logo = _pool_manifest(_image_pool(opts.non_logo), "non-logo")
    masked = _pool_manifest(_image_pool(opts.masked), "masked")
    regions = _read_regions(opts.regions)
    records = build_pair_set(
        non_logo,
        masked,
        n_per_source=opts.per_source,
        seed=opts.seed,
        out_dir=opts.out,
        rect_source=RandomRectangle(
            area_fraction=tuple(opts.fraction), aspect=tuple(opts.aspect)),
        regions=regions,
        workers=opts.workers,
    )
    write_run_record("pairs", opts, [opts.non_logo, opts.masked, opts.regions],
                     Path(opts.out) / "run_record.json")
    print(f"pairs: {len(records)} pairs -> {opts.out}")
    return EXIT_OK


def _parse_source(arg: str) -> tuple[str, str, str | None]:
    parts = arg.split(":", 2)
    if len(parts) < 2:
        raise InputError(f"--source needs FORMAT:PATH[:NAME], got {arg!r}")
    fmt, path = parts[0], parts[1]
    name = parts[2] if len(parts) == 3 else None
    return fmt, path, name


def cmd_build(opts: SimpleNamespace) -> int:
    if not opts.sources:
        raise InputError("build: at least one --source is required")
    fragments = []
    inputs = []
    for arg in opts.sources:
        fmt, path, name = _parse_source(arg)
        fragments.append(ingest(path, fmt, name))
        inputs.append(path)

    rules = None
    if opts.rules:
        doc = json.loads(Path(opts.rules).read_text(encoding="utf-8"))
        rules = MergeRules.from_mapping(doc)
        inputs.append(opts.rules)
    registry = read_registry(opts.registry) if opts.registry else None
    if opts.registry:
        inputs.append(opts.registry)
    exclude = set(_read_lines(opts.exclude)) if opts.exclude else set()
    if opts.exclude:
        inputs.append(opts.exclude)

    merged, clean_report = merge_and_clean(fragments, rules, registry, exclude)
    final, filter_report = filter_small_classes(merged, opts.min_images)

    out = Path(opts.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_manifest(final, out)
    if opts.registry_out and final.registry is not None:
        from .core import write_registry

        write_registry(final.registry, opts.registry_out)
    if opts.report_out:
        report = {
            "dropped_annotations": clean_report.dropped_annotations,
            "violations": clean_report.violations,
            "renamed": clean_report.renamed,
            "excluded_annotations": clean_report.excluded_annotations,
            "unknown_classes": clean_report.unknown_classes,
            "prefixed_image_ids": clean_report.prefixed_image_ids,
            "removed_classes": filter_report.removed_classes,
            "removed_images": filter_report.removed_images,
        }
        Path(opts.report_out).write_text(json.dumps(report, indent=2) + "\n",
                                         encoding="utf-8")
    write_run_record("build", opts, inputs, out.with_suffix(".run.json"))
    print(
        f"build: {len(final.images)} images, {len(final.annotations)} annotations, "
        f"{len(final.class_names())} classes -> {out}"
    )
    return EXIT_OK


def cmd_split(opts: SimpleNamespace) -> int:
    manifest = read_manifest(opts.manifest)
    if opts.plan == "open":
        if not opts.supervised or not opts.trainval:
            raise InputError("split --plan open needs --supervised and --trainval")
        supervised = _read_lines(opts.supervised)
        trainval = {
            str(k): [str(i) for i in v]
            for k, v in json.loads(Path(opts.trainval).read_text(encoding="utf-8")).items()
        }
        plan = SplitPlan.open(
            supervised, trainval, seed=opts.seed,
            trainval_size=opts.trainval_size, val_fraction=opts.val_fraction,
        )
        inputs = [opts.manifest, opts.supervised, opts.trainval]
    else:
        plan = SplitPlan.fully_supervised(
            seed=opts.seed, train_fraction=opts.train_fraction,
            val_fraction=opts.val_fraction, test_fraction=opts.test_fraction,
        )
        inputs = [opts.manifest]
    result = split(manifest, plan)
    out = Path(opts.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_manifest(result, out)
    write_run_record("split", opts, inputs, out.with_suffix(".run.json"))
    sizes = {name: len(ids) for name, ids in sorted(result.splits.items())}
    print(f"split: {sizes} -> {out}")
    return EXIT_OK


def cmd_stats(opts: SimpleNamespace) -> int:
    manifest = read_manifest(opts.manifest)
    rows = compute_stats(manifest)
    print(render_stats(rows))
    out = Path(opts.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    payload = [row.__dict__ for row in rows]
    out.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    write_run_record("stats", opts, [opts.manifest], out.with_suffix(".run.json"))
    return EXIT_OK


def cmd_eval(opts: SimpleNamespace) -> int:
    manifest = read_manifest(opts.manifest)
    detections = read_detections(opts.detections)
    inputs = [opts.manifest, opts.detections]
    supervised: frozenset[str] = frozenset()
    if opts.supervised:
        supervised = frozenset(_read_lines(opts.supervised))
        inputs.append(opts.supervised)
    elif opts.registry:
        supervised = frozenset(read_registry(opts.registry).supervised_names())
        inputs.append(opts.registry)
    cfg = EvalConfig(
        iou_threshold=opts.iou,
        interpolation=opts.interpolation,
        scale_threshold=opts.scale_threshold,
        supervised_classes=supervised,
    )
    report = evaluate(detections, manifest, cfg)
    print(render_report(report, per_class=opts.per_class))
    for warning in report.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    out = Path(opts.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(report_to_json(report), indent=2) + "\n", encoding="utf-8")
    write_run_record("eval", opts, inputs, out.with_suffix(".run.json"))
    return EXIT_OK


def cmd_compose(opts: SimpleNamespace) -> int:
    manifest = read_manifest(opts.manifest)
    synth_manifest = read_manifest(opts.synth)
    manifests = compose_training_set(manifest, synth_manifest, opts.mode)
    out_dir = Path(opts.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if opts.mode == "mixed":
        names = ["train_mixed.jsonl"]
    else:
        names = ["train_synthetic.jsonl", "train_real.jsonl"]
    for m, name in zip(manifests, names):
        write_manifest(m, out_dir / name)
    write_run_record("compose", opts, [opts.manifest, opts.synth],
                     out_dir / "run_record.json")
    print(f"compose: {', '.join(names)} -> {out_dir}")
    return EXIT_OK


def _class_color(name: str) -> tuple[int, int, int]:
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    return tuple(64 + digest[i] % 192 for i in range(3))


def _burn_box(pixels: np.ndarray, box, color: tuple[int, int, int], thickness: int = 2) -> None:
    h, w = pixels.shape[:2]
    x0 = max(0, min(w - 1, int(round(box.xmin))))
    y0 = max(0, min(h - 1, int(round(box.ymin))))
    x1 = max(x0 + 1, min(w, int(round(box.xmax))))
    y1 = max(y0 + 1, min(h, int(round(box.ymax))))
    t = thickness
    pixels[y0:min(y0 + t, y1), x0:x1, :3] = color
    pixels[max(y1 - t, y0):y1, x0:x1, :3] = color
    pixels[y0:y1, x0:min(x0 + t, x1), :3] = color
    pixels[y0:y1, max(x1 - t, x0):x1, :3] = color


def cmd_preview(opts: SimpleNamespace) -> int:
    manifest = read_manifest(opts.manifest)
    base = Path(opts.manifest).parent
    out_dir = Path(opts.out)
    ids = sorted(manifest.images)
    n = opts.n
    if n <= 0:
        print("preview: nothing to render (n <= 0)")
        return EXIT_OK
    if n >= len(ids):
        if n > len(ids):
            print(f"warning: requested {n} previews, corpus has {len(ids)}", file=sys.stderr)
        sample = ids
    else:
        rng = derive_rng(opts.seed, "preview")
        sample = sorted(rng.choice(np.asarray(ids, dtype=object), size=n, replace=False))
    for image_id in sample:
        rec = manifest.images[image_id]
        rec_path = Path(rec.path)
        img = load_image(rec_path if rec_path.is_absolute() else base / rec_path)
        pixels = img.pixels.copy()
        for ann in manifest.annotations_for(image_id):
            _burn_box(pixels, ann.box, _class_color(ann.class_name))
        save_png(pixels, out_dir / f"{image_id.replace('/', '_')}.png")
    write_run_record("preview", opts, [opts.manifest], out_dir / "run_record.json")
    print(f"preview: {len(sample)} images -> {out_dir}")
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "pairs": cmd_pairs,
    "build": cmd_build,
    "split": cmd_split,
    "stats": cmd_stats,
    "eval": cmd_eval,
    "compose": cmd_compose,
    "preview": cmd_preview,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    command = getattr(ns, "command", None)
    if command is None:
        parser.print_help()
        return EXIT_INPUT_ERROR
    try:
        opts = resolve_options(command, ns)
        return COMMANDS[command](opts)
    except (InputError, ValueError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return EXIT_INPUT_ERROR
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
