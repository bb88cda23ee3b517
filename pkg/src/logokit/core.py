"""Domain types, box geometry, annotation validation, and manifest I/O.

Everything downstream (synthesis, pair generation, benchmark assembly,
evaluation) speaks in these types.  All types are immutable values and all
operations are pure functions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

__all__ = [
    "BoundingBox",
    "ImageRecord",
    "Annotation",
    "Detection",
    "LogoClass",
    "ClassRegistry",
    "DatasetManifest",
    "ManifestError",
    "RegistryError",
    "iou",
    "scale_ratio",
    "validate_annotation",
    "read_manifest",
    "write_manifest",
    "read_registry",
    "write_registry",
]

# Violation codes emitted by validate_annotation.
INVERTED_X = "inverted-x"
INVERTED_Y = "inverted-y"
OUT_OF_BOUNDS = "out-of-bounds"
OVERSIZED = "oversized"
MISSING_IMAGE = "missing-image"


class ManifestError(ValueError):
    """Manifest file failed to parse or violates a structural invariant."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class RegistryError(ValueError):
    """Class registry violates an invariant (duplicate name, ambiguous alias)."""


@dataclass(frozen=True, order=True)
class BoundingBox:
    """Axis-aligned box in pixel space, origin top-left, real-valued extents.

    Coordinates are inclusive real extents; area is (xmax-xmin)*(ymax-ymin)
    with no +1 correction.
    """

    xmin: float
    ymin: float
    xmax: float
    ymax: float

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    @property
    def area(self) -> float:
        return self.width * self.height

    def is_valid(self) -> bool:
        """True iff the box has positive extent on both axes."""
        return self.xmin < self.xmax and self.ymin < self.ymax


@dataclass(frozen=True)
class ImageRecord:
    """One image known to a manifest."""

    id: str
    path: str
    width: int
    height: int
    source: str = ""


@dataclass(frozen=True)
class Annotation:
    """A ground-truth box of one class on one image."""

    image_id: str
    class_name: str
    box: BoundingBox


@dataclass(frozen=True)
class Detection:
    """A detector output: box, class, and confidence in [0, 1]."""

    image_id: str
    class_name: str
    box: BoundingBox
    score: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"detection score {self.score} outside [0, 1]")


@dataclass(frozen=True)
class LogoClass:
    """One logo class: canonical name, supervision flag, design image."""

    name: str
    supervised: bool = False
    design_path: str | None = None
    aliases: tuple[str, ...] = ()


class ClassRegistry:
    """Ordered set of logo classes plus an alias map from source-dataset names.

    Canonical names are unique and every alias resolves to exactly one
    canonical name.
    """

    def __init__(self, classes: Iterable[LogoClass]):
        self.classes: list[LogoClass] = list(classes)
        self._by_name: dict[str, LogoClass] = {}
        self._alias_to_name: dict[str, str] = {}
        for cls in self.classes:
            if cls.name in self._by_name:
                raise RegistryError(f"duplicate class name {cls.name!r}")
            self._by_name[cls.name] = cls
        for cls in self.classes:
            for alias in cls.aliases:
                owner = self._alias_to_name.get(alias)
                if owner is not None and owner != cls.name:
                    raise RegistryError(
                        f"alias {alias!r} maps to both {owner!r} and {cls.name!r}"
                    )
                if alias in self._by_name and alias != cls.name:
                    raise RegistryError(
                        f"alias {alias!r} collides with canonical class {alias!r}"
                    )
                self._alias_to_name[alias] = cls.name

    def __iter__(self) -> Iterator[LogoClass]:
        return iter(self.classes)

    def __len__(self) -> int:
        return len(self.classes)

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def get(self, name: str) -> LogoClass | None:
        return self._by_name.get(name)

    def resolve(self, name: str) -> str | None:
        """Canonical name for a class name or alias, None when unknown."""
        if name in self._by_name:
            return name
        return self._alias_to_name.get(name)

    def names(self) -> list[str]:
        return [c.name for c in self.classes]

    def supervised_names(self) -> list[str]:
        return [c.name for c in self.classes if c.supervised]

    def require_designs(self) -> None:
        """Raise unless every class carries exactly one design image path."""
        missing = [c.name for c in self.classes if not c.design_path]
        if missing:
            raise RegistryError(f"classes without a design image: {missing}")


@dataclass
class DatasetManifest:
    """Images, annotations, optional class registry, and named splits."""

    images: dict[str, ImageRecord] = field(default_factory=dict)
    annotations: list[Annotation] = field(default_factory=list)
    registry: ClassRegistry | None = None
    splits: dict[str, list[str]] = field(default_factory=dict)

    def annotations_for(self, image_id: str) -> list[Annotation]:
        return [a for a in self.annotations if a.image_id == image_id]

    def class_names(self) -> list[str]:
        """Classes present in the annotations, sorted."""
        return sorted({a.class_name for a in self.annotations})

    def images_of_class(self, class_name: str) -> list[str]:
        """Sorted ids of images carrying at least one box of the class."""
        return sorted({a.image_id for a in self.annotations if a.class_name == class_name})

    def split_ids(self, name: str) -> list[str]:
        return list(self.splits.get(name, []))

    def check(self) -> None:
        """Raise ManifestError on any referential-integrity violation."""
        for ann in self.annotations:
            if ann.image_id not in self.images:
                raise ManifestError(
                    f"annotation references missing image id {ann.image_id!r}"
                )
        for name, ids in self.splits.items():
            for image_id in ids:
                if image_id not in self.images:
                    raise ManifestError(
                        f"split {name!r} references missing image id {image_id!r}"
                    )
        core = [set(self.splits.get(n, [])) for n in ("train", "val", "test")]
        for i in range(len(core)):
            for j in range(i + 1, len(core)):
                overlap = core[i] & core[j]
                if overlap:
                    raise ManifestError(
                        f"train/val/test splits overlap on {sorted(overlap)[:5]}"
                    )


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two valid boxes, in [0, 1]."""
    iw = min(a.xmax, b.xmax) - max(a.xmin, b.xmin)
    ih = min(a.ymax, b.ymax) - max(a.ymin, b.ymin)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


def scale_ratio(ann: Annotation, img: ImageRecord) -> float:
    """Box area as a percentage of the whole image area, in (0, 100]."""
    return 100.0 * ann.box.area / (img.width * img.height)


def validate_annotation(ann: Annotation, img: ImageRecord | None) -> list[str]:
    """Violation codes for an annotation checked against its image.

    Empty list iff the box satisfies every BoundingBox invariant.  A missing
    image yields the single code "missing-image" since no bound checks are
    possible.
    """
    if img is None:
        return [MISSING_IMAGE]
    box = ann.box
    codes = []
    if not box.xmin < box.xmax:
        codes.append(INVERTED_X)
    if not box.ymin < box.ymax:
        codes.append(INVERTED_Y)
    inside = (
        box.xmin >= 0
        and box.ymin >= 0
        and box.xmax <= img.width
        and box.ymax <= img.height
    )
    if not inside:
        codes.append(OUT_OF_BOUNDS)
    elif box.width > img.width or box.height > img.height:
        # A contained box can never be larger than its image; this code fires
        # only for non-finite coordinates that dodge the containment check.
        codes.append(OVERSIZED)
    return codes


# --------------------------------------------------------------------------
# Manifest serialization: UTF-8 line-delimited JSON, one record per line,
# discriminated by "kind" in {"image", "annotation", "split"}.
# --------------------------------------------------------------------------

def _dump(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


def write_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    """Write a manifest in canonical order: images, annotations, splits.

    Records are sorted so that writing is deterministic and write-then-read
    round-trips to an identical file.
    """
    manifest.check()
    lines = []
    for image_id in sorted(manifest.images):
        rec = manifest.images[image_id]
        lines.append(_dump({
            "kind": "image",
            "id": rec.id,
            "path": rec.path,
            "width": rec.width,
            "height": rec.height,
            "source": rec.source,
        }))
    ann_key = lambda a: (a.image_id, a.class_name, a.box)
    for ann in sorted(manifest.annotations, key=ann_key):
        lines.append(_dump({
            "kind": "annotation",
            "image_id": ann.image_id,
            "class": ann.class_name,
            "xmin": ann.box.xmin,
            "ymin": ann.box.ymin,
            "xmax": ann.box.xmax,
            "ymax": ann.box.ymax,
        }))
    for name in sorted(manifest.splits):
        lines.append(_dump({
            "kind": "split",
            "name": name,
            "image_ids": sorted(manifest.splits[name]),
        }))
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def _require_fields(obj: dict, fields: tuple[str, ...], line: int) -> None:
    for name in fields:
        if name not in obj:
            raise ManifestError(f"record is missing field {name!r}", line=line)


def read_manifest(path: str | Path) -> DatasetManifest:
    """Parse a JSONL manifest; errors carry the offending line number."""
    manifest = DatasetManifest()
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"invalid JSON: {exc.msg}", line=lineno) from exc
        kind = obj.get("kind")
        if kind == "image":
            _require_fields(obj, ("id", "path", "width", "height", "source"), lineno)
            rec = ImageRecord(
                id=str(obj["id"]),
                path=str(obj["path"]),
                width=int(obj["width"]),
                height=int(obj["height"]),
                source=str(obj["source"]),
            )
            if rec.width <= 0 or rec.height <= 0:
                raise ManifestError(
                    f"image {rec.id!r} has non-positive dimensions", line=lineno
                )
            if rec.id in manifest.images:
                raise ManifestError(f"duplicate image id {rec.id!r}", line=lineno)
            manifest.images[rec.id] = rec
        elif kind == "annotation":
            _require_fields(
                obj, ("image_id", "class", "xmin", "ymin", "xmax", "ymax"), lineno
            )
            manifest.annotations.append(Annotation(
                image_id=str(obj["image_id"]),
                class_name=str(obj["class"]),
                box=BoundingBox(
                    float(obj["xmin"]), float(obj["ymin"]),
                    float(obj["xmax"]), float(obj["ymax"]),
                ),
            ))
        elif kind == "split":
            _require_fields(obj, ("name", "image_ids"), lineno)
            manifest.splits[str(obj["name"])] = [str(i) for i in obj["image_ids"]]
        else:
            raise ManifestError(f"unknown record kind {kind!r}", line=lineno)
    manifest.check()
    return manifest


# --------------------------------------------------------------------------
# Class registry serialization: a single JSON document.
# --------------------------------------------------------------------------

def write_registry(registry: ClassRegistry, path: str | Path) -> None:
    doc = {"classes": [
        {
            "name": c.name,
            "supervised": c.supervised,
            "design_path": c.design_path,
            "aliases": list(c.aliases),
        }
        for c in registry
    ]}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def read_registry(path: str | Path) -> ClassRegistry:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise RegistryError(f"invalid registry JSON: {exc}") from exc
    if not isinstance(doc, dict) or "classes" not in doc:
        raise RegistryError("registry document must be an object with a 'classes' list")
    classes = []
    for entry in doc["classes"]:
        classes.append(LogoClass(
            name=str(entry["name"]),
            supervised=bool(entry.get("supervised", False)),
            design_path=entry.get("design_path"),
            aliases=tuple(str(a) for a in entry.get("aliases", ())),
        ))
    return ClassRegistry(classes)
