"""Benchmark assembly: ingestion adapters, class merging and cleaning, the
open and fully-supervised split protocols, corpus statistics, and training-set
composition for external detectors."""

from __future__ import annotations

import csv
import fnmatch
import xml.etree.ElementTree as ET
import json
from dataclasses import dataclass, field
from pathlib import Path

from .core import (
    Annotation,
    BoundingBox,
    ClassRegistry,
    DatasetManifest,
    ImageRecord,
    LogoClass,
    validate_annotation,
)
from .seeds import derive_rng

__all__ = [
    "MergeRules",
    "MergeConflictError",
    "CleanReport",
    "FilterReport",
    "SplitPlan",
    "StatsRow",
    "ingest",
    "merge_and_clean",
    "filter_small_classes",
    "split",
    "compute_stats",
    "render_stats",
    "compose_training_set",
]


class MergeConflictError(ValueError):
    """A source class name matches the patterns of two canonical classes."""


@dataclass(frozen=True)
class MergeRules:
    """Canonical brand names with glob patterns over source class names."""

    rules: tuple[tuple[str, tuple[str, ...]], ...] = ()

    @classmethod
    def from_mapping(cls, mapping: dict[str, list[str]]) -> "MergeRules":
        return cls(tuple((canon, tuple(pats)) for canon, pats in mapping.items()))

    def resolve(self, name: str) -> str | None:
        """Canonical name for a source class name, None when no rule matches."""
        matches = [
            (canon, pat)
            for canon, pats in self.rules
            for pat in pats
            if fnmatch.fnmatchcase(name, pat)
        ]
        canons = {c for c, _ in matches}
        if len(canons) > 1:
            raise MergeConflictError(
                f"class name {name!r} matches conflicting rules: "
                + ", ".join(f"{c!r} via {p!r}" for c, p in matches)
            )
        return matches[0][0] if matches else None


# --------------------------------------------------------------------------
# Ingestion adapters.  Fragments carry raw boxes; cleaning happens in
# merge_and_clean so that bad source annotations are reported, not hidden.
# --------------------------------------------------------------------------

def _ingest_coco(path: Path, source: str) -> DatasetManifest:
    doc = json.loads(path.read_text(encoding="utf-8"))
    categories = {c["id"]: str(c["name"]) for c in doc.get("categories", [])}
    manifest = DatasetManifest()
    for img in doc.get("images", []):
        rec = ImageRecord(
            id=str(img["id"]),
            path=str(img["file_name"]),
            width=int(img["width"]),
            height=int(img["height"]),
            source=source,
        )
        manifest.images[rec.id] = rec
    for ann in doc.get("annotations", []):
        x, y, w, h = (float(v) for v in ann["bbox"])
        cat = ann["category_id"]
        if cat not in categories:
            raise ValueError(f"{path}: annotation references unknown category id {cat}")
        manifest.annotations.append(Annotation(
            image_id=str(ann["image_id"]),
            class_name=categories[cat],
            box=BoundingBox(x, y, x + w, y + h),
        ))
    return manifest


def _ingest_voc(path: Path, source: str) -> DatasetManifest:
    files = sorted(path.glob("*.xml")) if path.is_dir() else [path]
    manifest = DatasetManifest()
    for xml_file in files:
        root = ET.parse(xml_file).getroot()
        size = root.find("size")
        if size is None:
            raise ValueError(f"{xml_file}: missing <size> element")
        image_id = xml_file.stem
        filename = root.findtext("filename", default=f"{image_id}.jpg")
        rec = ImageRecord(
            id=image_id,
            path=filename,
            width=int(size.findtext("width")),
            height=int(size.findtext("height")),
            source=source,
        )
        manifest.images[rec.id] = rec
        for obj in root.iter("object"):
            box = obj.find("bndbox")
            if box is None:
                continue
            manifest.annotations.append(Annotation(
                image_id=image_id,
                class_name=obj.findtext("name", default="unknown"),
                box=BoundingBox(
                    float(box.findtext("xmin")),
                    float(box.findtext("ymin")),
                    float(box.findtext("xmax")),
                    float(box.findtext("ymax")),
                ),
            ))
    return manifest


def _probe_dims(image_path: Path) -> tuple[int, int]:
    from PIL import Image

    with Image.open(image_path) as im:
        return im.width, im.height


def _ingest_csv(path: Path, source: str) -> DatasetManifest:
    manifest = DatasetManifest()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"image", "class", "xmin", "ymin", "xmax", "ymax"}
        if reader.fieldnames is None:
            return manifest
        missing = required - set(reader.fieldnames)
        if missing:
            raise ValueError(f"{path}: CSV header is missing columns {sorted(missing)}")
        for lineno, row in enumerate(reader, start=2):
            image_path = row["image"]
            image_id = Path(image_path).stem
            if image_id not in manifest.images:
                if row.get("width") and row.get("height"):
                    width, height = int(row["width"]), int(row["height"])
                else:
                    candidate = Path(image_path)
                    if not candidate.is_absolute():
                        candidate = path.parent / candidate
                    if not candidate.exists():
                        raise ValueError(
                            f"{path} line {lineno}: no width/height columns and "
                            f"image file {candidate} not found"
                        )
                    width, height = _probe_dims(candidate)
                manifest.images[image_id] = ImageRecord(
                    id=image_id, path=image_path, width=width, height=height,
                    source=source,
                )
            manifest.annotations.append(Annotation(
                image_id=image_id,
                class_name=row["class"],
                box=BoundingBox(
                    float(row["xmin"]), float(row["ymin"]),
                    float(row["xmax"]), float(row["ymax"]),
                ),
            ))
    return manifest


def ingest(path: str | Path, format: str, source: str | None = None) -> DatasetManifest:
    """Read one source dataset into a manifest fragment.

    Supported formats: "coco-json", "voc-xml", "flat-csv".  Boxes are carried
    through as-is; validity is judged later by merge_and_clean.
    """
    path = Path(path)
    source = source if source is not None else path.stem
    if format == "coco-json":
        return _ingest_coco(path, source)
    if format == "voc-xml":
        return _ingest_voc(path, source)
    if format == "flat-csv":
        return _ingest_csv(path, source)
    raise ValueError(f"unknown ingest format {format!r}")


# --------------------------------------------------------------------------
# Merging, cleaning, filtering.
# --------------------------------------------------------------------------

@dataclass
class CleanReport:
    dropped_annotations: int = 0
    violations: dict[str, int] = field(default_factory=dict)
    dropped_detail: list[tuple[str, str, tuple[str, ...]]] = field(default_factory=list)
    renamed: dict[str, str] = field(default_factory=dict)
    excluded_annotations: int = 0
    unknown_classes: list[str] = field(default_factory=list)
    prefixed_image_ids: int = 0


@dataclass
class FilterReport:
    removed_classes: dict[str, int] = field(default_factory=dict)
    removed_annotations: int = 0
    removed_images: int = 0


def _disambiguate_ids(fragments: list[DatasetManifest]) -> list[dict[str, str]]:
    """Per-fragment id remaps; ids colliding across fragments get a source prefix."""
    seen: dict[str, int] = {}
    for frag in fragments:
        for image_id in frag.images:
            seen[image_id] = seen.get(image_id, 0) + 1
    remaps = []
    for frag in fragments:
        remap = {}
        for image_id, rec in frag.images.items():
            if seen[image_id] > 1:
                remap[image_id] = f"{rec.source}/{image_id}"
        remaps.append(remap)
    return remaps


def merge_and_clean(
    fragments: list[DatasetManifest],
    rules: MergeRules | None = None,
    registry: ClassRegistry | None = None,
    exclude_classes: set[str] | None = None,
) -> tuple[DatasetManifest, CleanReport]:
    """Combine fragments into one manifest: canonical class names, duplicate
    image ids source-prefixed, invalid annotations dropped with a report.

    An existing registry contributes alias resolution plus supervision flags
    and design paths; names it cannot resolve are reported, never dropped.
    The exclusion list models out-of-band manual QA verdicts.
    """
    rules = rules or MergeRules()
    exclude_classes = exclude_classes or set()
    report = CleanReport()
    merged = DatasetManifest()

    remaps = _disambiguate_ids(fragments)
    for frag, remap in zip(fragments, remaps):
        report.prefixed_image_ids += len(remap)
        for image_id, rec in frag.images.items():
            new_id = remap.get(image_id, image_id)
            if new_id in merged.images:
                raise ValueError(
                    f"image id {new_id!r} appears twice within source {rec.source!r}"
                )
            merged.images[new_id] = ImageRecord(
                id=new_id, path=rec.path, width=rec.width, height=rec.height,
                source=rec.source,
            )
        for ann in frag.annotations:
            image_id = remap.get(ann.image_id, ann.image_id)

            name = ann.class_name
            canonical = rules.resolve(name)
            if canonical is None and registry is not None:
                canonical = registry.resolve(name)
                if canonical is None and name not in report.unknown_classes:
                    report.unknown_classes.append(name)
            if canonical is None:
                canonical = name
            if canonical != name:
                report.renamed[name] = canonical

            if canonical in exclude_classes:
                report.excluded_annotations += 1
                continue

            candidate = Annotation(image_id=image_id, class_name=canonical, box=ann.box)
            codes = validate_annotation(candidate, merged.images.get(image_id))
            if codes:
                report.dropped_annotations += 1
                for code in codes:
                    report.violations[code] = report.violations.get(code, 0) + 1
                report.dropped_detail.append((image_id, canonical, tuple(codes)))
                continue
            merged.annotations.append(candidate)

    class_names = sorted({a.class_name for a in merged.annotations})
    alias_map: dict[str, list[str]] = {c: [] for c in class_names}
    for src_name, canon in sorted(report.renamed.items()):
        if canon in alias_map:
            alias_map[canon].append(src_name)
    classes = []
    for name in class_names:
        prior = registry.get(name) if registry is not None else None
        aliases = list(alias_map[name])
        if prior is not None:
            aliases = sorted(set(aliases) | set(prior.aliases))
        classes.append(LogoClass(
            name=name,
            supervised=prior.supervised if prior is not None else False,
            design_path=prior.design_path if prior is not None else None,
            aliases=tuple(aliases),
        ))
    merged.registry = ClassRegistry(classes)
    report.unknown_classes.sort()
    return merged, report


def filter_small_classes(
    manifest: DatasetManifest, min_images: int = 10
) -> tuple[DatasetManifest, FilterReport]:
    """Drop classes appearing in fewer than min_images distinct images.

    Annotations of removed classes go with them; images left without any
    annotation are removed too.  Idempotent.
    """
    report = FilterReport()
    image_counts = {
        cls: len(manifest.images_of_class(cls)) for cls in manifest.class_names()
    }
    survivors = {cls for cls, n in image_counts.items() if n >= min_images}
    report.removed_classes = {
        cls: n for cls, n in sorted(image_counts.items()) if cls not in survivors
    }

    out = DatasetManifest()
    out.annotations = [a for a in manifest.annotations if a.class_name in survivors]
    report.removed_annotations = len(manifest.annotations) - len(out.annotations)
    keep_ids = {a.image_id for a in out.annotations}
    out.images = {i: rec for i, rec in manifest.images.items() if i in keep_ids}
    report.removed_images = len(manifest.images) - len(out.images)
    if manifest.registry is not None:
        out.registry = ClassRegistry(
            [c for c in manifest.registry if c.name in survivors]
        )
    out.splits = {
        name: [i for i in ids if i in keep_ids]
        for name, ids in manifest.splits.items()
    }
    return out, report


# --------------------------------------------------------------------------
# Split protocols.
# --------------------------------------------------------------------------

@dataclass
class SplitPlan:
    """Either the open protocol (designated trainval for supervised classes,
    10%/90% val/test for the rest) or a per-class 60/10/30 random split."""

    variant: str
    seed: int = 0
    supervised_classes: tuple[str, ...] = ()
    trainval: dict[str, tuple[str, ...]] = field(default_factory=dict)
    trainval_size: int = 40
    val_fraction: float = 0.10
    train_fraction: float = 0.60
    test_fraction: float = 0.30

    def __post_init__(self) -> None:
        if self.variant not in ("open", "fully-supervised"):
            raise ValueError(f"unknown split variant {self.variant!r}")
        if self.variant == "fully-supervised":
            total = self.train_fraction + self.val_fraction + self.test_fraction
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"split fractions sum to {total}, expected 1.0")

    @classmethod
    def open(
        cls,
        supervised_classes: list[str],
        trainval: dict[str, list[str]],
        seed: int = 0,
        trainval_size: int = 40,
        val_fraction: float = 0.10,
    ) -> "SplitPlan":
        return cls(
            variant="open",
            seed=seed,
            supervised_classes=tuple(supervised_classes),
            trainval={c: tuple(ids) for c, ids in trainval.items()},
            trainval_size=trainval_size,
            val_fraction=val_fraction,
        )

    @classmethod
    def fully_supervised(
        cls,
        seed: int = 0,
        train_fraction: float = 0.60,
        val_fraction: float = 0.10,
        test_fraction: float = 0.30,
    ) -> "SplitPlan":
        return cls(
            variant="fully-supervised",
            seed=seed,
            train_fraction=train_fraction,
            val_fraction=val_fraction,
            test_fraction=test_fraction,
        )


def _round_half_up(x: float) -> int:
    return int(x + 0.5) if x >= 0 else -int(-x + 0.5)


def _val_count(n: int, fraction: float) -> int:
    # round(fraction * n), at least 1 when the class has images to spare
    if n == 0:
        return 0
    count = _round_half_up(fraction * n)
    if n >= 2:
        count = max(1, count)
    return min(count, n)


def split(manifest: DatasetManifest, plan: SplitPlan) -> DatasetManifest:
    """Assign every annotated image to exactly one of train/val/test.

    Deterministic given plan.seed; images carrying several classes are
    assigned by the first class (class names processed in sorted order) that
    reaches them.
    """
    classes = manifest.class_names()
    assigned: dict[str, str] = {}

    if plan.variant == "open":
        class_set = set(classes)
        missing = [c for c in plan.supervised_classes if c not in class_set]
        if missing:
            raise ValueError(f"supervised classes absent from manifest: {missing}")
        for cls in plan.supervised_classes:
            ids = plan.trainval.get(cls)
            if ids is None:
                raise ValueError(f"supervised class {cls!r} has no designated trainval images")
            for image_id in ids:
                if image_id not in manifest.images:
                    raise ValueError(
                        f"trainval image {image_id!r} of class {cls!r} not in manifest"
                    )
                assigned[image_id] = "train"
        for cls in sorted(classes):
            members = [
                i for i in manifest.images_of_class(cls) if i not in assigned
            ]
            rng = derive_rng(plan.seed, "split", cls)
            rng.shuffle(members)
            n_val = _val_count(len(members), plan.val_fraction)
            for image_id in members[:n_val]:
                assigned[image_id] = "val"
            for image_id in members[n_val:]:
                assigned[image_id] = "test"
    else:
        for cls in sorted(classes):
            members = [
                i for i in manifest.images_of_class(cls) if i not in assigned
            ]
            rng = derive_rng(plan.seed, "split", cls)
            rng.shuffle(members)
            n = len(members)
            n_val = _val_count(n, plan.val_fraction)
            n_train = min(_round_half_up(plan.train_fraction * n), n - n_val)
            for image_id in members[:n_train]:
                assigned[image_id] = "train"
            for image_id in members[n_train:n_train + n_val]:
                assigned[image_id] = "val"
            for image_id in members[n_train + n_val:]:
                assigned[image_id] = "test"

    out = DatasetManifest(
        images=dict(manifest.images),
        annotations=list(manifest.annotations),
        registry=manifest.registry,
    )
    out.splits = {name: [] for name in ("train", "val", "test")}
    for image_id in sorted(assigned):
        out.splits[assigned[image_id]].append(image_id)
    return out


# --------------------------------------------------------------------------
# Statistics and training-set composition.
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class StatsRow:
    dataset: str
    classes: int
    images: int
    inst_min: int
    inst_max: int
    inst_mean: float
    scale_min: float
    scale_max: float
    scale_mean: float
    # big = instance area ratio >= threshold; reported over instances and
    # over images (an image is big when it holds at least one big instance)
    big_instance_frac: float = 0.0
    big_image_frac: float = 0.0


def _stats_for(
    manifest: DatasetManifest, dataset: str, image_ids: set[str],
    scale_threshold: float,
) -> StatsRow:
    from .core import scale_ratio

    anns = [a for a in manifest.annotations if a.image_id in image_ids]
    per_class: dict[str, int] = {}
    scales = []
    big_images = set()
    n_big = 0
    for ann in anns:
        per_class[ann.class_name] = per_class.get(ann.class_name, 0) + 1
        ratio = scale_ratio(ann, manifest.images[ann.image_id])
        scales.append(ratio)
        if ratio / 100.0 >= scale_threshold:
            n_big += 1
            big_images.add(ann.image_id)
    counts = sorted(per_class.values())
    return StatsRow(
        dataset=dataset,
        classes=len(per_class),
        images=len(image_ids),
        inst_min=counts[0] if counts else 0,
        inst_max=counts[-1] if counts else 0,
        inst_mean=sum(counts) / len(counts) if counts else 0.0,
        scale_min=min(scales) if scales else 0.0,
        scale_max=max(scales) if scales else 0.0,
        scale_mean=sum(scales) / len(scales) if scales else 0.0,
        big_instance_frac=n_big / len(anns) if anns else 0.0,
        big_image_frac=len(big_images) / len(image_ids) if image_ids else 0.0,
    )


def compute_stats(
    manifest: DatasetManifest, scale_threshold: float = 0.02
) -> list[StatsRow]:
    """Per-source rows plus a total row, mirroring the benchmark's summary
    table: class/image counts, instances per class, and scale percentages."""
    sources = sorted({rec.source for rec in manifest.images.values()})
    rows = []
    for source in sources:
        ids = {i for i, rec in manifest.images.items() if rec.source == source}
        rows.append(_stats_for(manifest, source, ids, scale_threshold))
    rows.append(_stats_for(manifest, "total", set(manifest.images), scale_threshold))
    return rows


def _fmt_scale(v: float) -> str:
    return f"{v:.1f}" if v >= 99.995 else (f"{v:.2f}" if v >= 1 else f"{v:.4f}")


STATS_HEADER = (
    "Dataset", "Logos", "Images",
    "min~max (mean) Instances / Class", "min~max (mean) Scale (%)",
)


def render_stats(rows: list[StatsRow]) -> str:
    table = [list(STATS_HEADER)]
    for r in rows:
        table.append([
            r.dataset,
            str(r.classes),
            f"{r.images:,}",
            f"{r.inst_min:,}~{r.inst_max:,} ({r.inst_mean:.2f})",
            f"{_fmt_scale(r.scale_min)}~{_fmt_scale(r.scale_max)} ({r.scale_mean:.2f})",
        ])
    widths = [max(len(row[c]) for row in table) for c in range(len(STATS_HEADER))]
    lines = []
    for row in table:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return "\n".join(lines)


def _restrict(manifest: DatasetManifest, image_ids: list[str], split_name: str) -> DatasetManifest:
    ids = set(image_ids)
    return DatasetManifest(
        images={i: rec for i, rec in manifest.images.items() if i in ids},
        annotations=[a for a in manifest.annotations if a.image_id in ids],
        registry=manifest.registry,
        splits={split_name: sorted(ids)},
    )


def compose_training_set(
    manifest: DatasetManifest,
    synth_manifest: DatasetManifest,
    mode: str,
) -> list[DatasetManifest]:
    """Training manifests for an external detector.

    "mixed" yields one manifest whose train split interleaves real and
    synthetic images; "sequential" yields [synthetic-only, real-only] for
    two-stage training.  Both modes cover the same image multiset.
    """
    if mode not in ("mixed", "sequential"):
        raise ValueError(f"unknown composition mode {mode!r}")
    if "train" not in manifest.splits:
        raise ValueError("real manifest has no train split")
    real = _restrict(manifest, manifest.splits["train"], "train")
    synth_ids = synth_manifest.splits.get("train") or sorted(synth_manifest.images)
    synth = _restrict(synth_manifest, list(synth_ids), "train")

    if mode == "sequential":
        return [synth, real]

    collisions = set(real.images) & set(synth.images)
    if collisions:
        raise ValueError(f"real and synthetic manifests share image ids: {sorted(collisions)[:5]}")
    mixed = DatasetManifest(
        images={**real.images, **synth.images},
        annotations=real.annotations + synth.annotations,
        registry=manifest.registry,
    )
    real_ids = sorted(real.images)
    synth_ids = sorted(synth.images)
    interleaved = []
    for i in range(max(len(real_ids), len(synth_ids))):
        if i < len(real_ids):
            interleaved.append(real_ids[i])
        if i < len(synth_ids):
            interleaved.append(synth_ids[i])
    mixed.splits = {"train": interleaved}
    return [mixed]
