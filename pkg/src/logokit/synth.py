"""Synthetic training-image generation: composite transformed logo designs
onto natural backgrounds and emit tight box annotations.

Generation is embarrassingly parallel; every record's randomness derives
from (seed, class name, record index), so any scheduling produces identical
bytes.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from .core import Annotation, BoundingBox, DatasetManifest, ImageRecord
from .raster import RasterImage, save_mask, save_png
from .seeds import derive_rng
from .transforms import (
    DegenerateTransformError,
    TransformRanges,
    TransformSpec,
    sample_spec,
    transform_logo,
)

__all__ = [
    "SynthRecord",
    "PlacementError",
    "SynthSizingError",
    "composite",
    "synth_record",
    "synth_class",
    "plan_jobs",
    "SynthJob",
    "run_synth_job",
    "manifest_from_records",
]

SYNTHETIC_SOURCE = "synthetic"
MAX_PLACEMENT_ATTEMPTS = 100


class PlacementError(ValueError):
    """The patch does not fit inside the background at the requested spot."""


class SynthSizingError(RuntimeError):
    """Placement failed repeatedly; backgrounds too small for the transforms."""


@dataclass(frozen=True)
class SynthRecord:
    """One emitted synthetic image with its annotation and provenance."""

    image_id: str
    image_path: str
    class_name: str
    box: BoundingBox
    spec: TransformSpec
    background_id: str
    mask_path: str | None = None


def composite(
    background: RasterImage, patch: RasterImage, x: int, y: int
) -> tuple[RasterImage, BoundingBox]:
    """Source-over blend of an RGBA patch onto an RGB background at (x, y).

    Returns the blended image and the tight box of the patch's nonzero-alpha
    support translated into background coordinates.  Pixels with zero alpha
    leave the background byte-identical.
    """
    if patch.channels != 4:
        raise ValueError("patch must be RGBA")
    ph, pw = patch.height, patch.width
    if x < 0 or y < 0 or x + pw > background.width or y + ph > background.height:
        raise PlacementError(
            f"patch {pw}x{ph} at ({x}, {y}) exceeds background "
            f"{background.width}x{background.height}"
        )
    support = patch.alpha > 0
    if not support.any():
        raise ValueError("patch has empty alpha support, no box emittable")

    out = background.pixels.copy()
    region = out[y:y + ph, x:x + pw, :3].astype(np.uint32)
    alpha = patch.alpha.astype(np.uint32)[:, :, None]
    blended = (alpha * patch.rgb.astype(np.uint32) + (255 - alpha) * region + 127) // 255
    out[y:y + ph, x:x + pw, :3] = blended.astype(np.uint8)

    rows = np.flatnonzero(support.any(axis=1))
    cols = np.flatnonzero(support.any(axis=0))
    box = BoundingBox(
        xmin=float(x + cols[0]),
        ymin=float(y + rows[0]),
        xmax=float(x + cols[-1] + 1),
        ymax=float(y + rows[-1] + 1),
    )
    return RasterImage(out), box


def _resolve_scale(
    rng: np.random.Generator,
    ranges: TransformRanges,
    design: RasterImage,
    background: RasterImage,
) -> float | None:
    """Scale factor hitting a sampled area fraction of the background."""
    if ranges.scale is not None:
        return None  # sample_spec already drew a factor from the range
    frac = rng.uniform(*ranges.area_fraction)
    support_px = int(np.count_nonzero(design.alpha > 0))
    if support_px == 0:
        raise ValueError("design has empty alpha support")
    target_area = frac * background.width * background.height
    return float(np.sqrt(target_area / support_px))


def synth_record(
    design: RasterImage,
    backgrounds: list[tuple[str, RasterImage]],
    class_name: str,
    index: int,
    seed: int,
    ranges: TransformRanges,
    out_dir: str | Path,
    emit_mask: bool = True,
) -> SynthRecord:
    """Generate one synthetic image; fully determined by (seed, class, index)."""
    rng = derive_rng(seed, class_name, index)
    bg_id, background = backgrounds[int(rng.integers(len(backgrounds)))]

    last_error = "no attempt made"
    for _ in range(MAX_PLACEMENT_ATTEMPTS):
        spec_seed = int(rng.integers(0, 2**63))
        spec = sample_spec(spec_seed, ranges)
        scale = _resolve_scale(rng, ranges, design, background)
        if scale is not None:
            spec = replace(spec, scale=scale)
        try:
            patch = transform_logo(design, spec)
        except DegenerateTransformError as exc:
            last_error = str(exc)
            continue
        if patch.width > background.width or patch.height > background.height:
            last_error = (
                f"patch {patch.width}x{patch.height} larger than background "
                f"{background.width}x{background.height}"
            )
            continue
        x = int(rng.integers(0, background.width - patch.width + 1))
        y = int(rng.integers(0, background.height - patch.height + 1))
        image, box = composite(background, patch, x, y)

        # Paths are recorded relative to out_dir so the emitted manifest is
        # identical no matter where the corpus lands.
        out_dir = Path(out_dir)
        image_id = f"{class_name}_{index:05d}"
        rel_image = f"images/{image_id}.png"
        save_png(image, out_dir / rel_image)
        rel_mask = None
        if emit_mask:
            mask = np.zeros((background.height, background.width), dtype=np.uint8)
            mask[y:y + patch.height, x:x + patch.width][patch.alpha > 0] = 255
            rel_mask = f"masks/{image_id}.png"
            save_mask(mask, out_dir / rel_mask)
        return SynthRecord(
            image_id=image_id,
            image_path=rel_image,
            class_name=class_name,
            box=box,
            spec=spec,
            background_id=bg_id,
            mask_path=rel_mask,
        )
    raise SynthSizingError(
        f"{MAX_PLACEMENT_ATTEMPTS} consecutive placement attempts failed for "
        f"{class_name}[{index}]: {last_error}; shrink area_fraction or use "
        f"larger backgrounds"
    )


def synth_class(
    design: RasterImage,
    backgrounds: list[tuple[str, RasterImage]],
    n: int,
    seed: int,
    ranges: TransformRanges,
    out_dir: str | Path,
    class_name: str,
    emit_masks: bool = True,
) -> list[SynthRecord]:
    """Generate n synthetic images for one class."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not backgrounds:
        raise ValueError("at least one background is required")
    return [
        synth_record(design, backgrounds, class_name, i, seed, ranges, out_dir, emit_masks)
        for i in range(n)
    ]


def plan_jobs(class_names: list[str], per_class: int = 100) -> list[tuple[str, int]]:
    """Enumerate (class, index) generation jobs: per_class records per class."""
    if per_class < 1:
        raise ValueError("per_class must be >= 1")
    return [(name, i) for name in class_names for i in range(per_class)]


@dataclass(frozen=True)
class SynthJob:
    """Self-contained description of one record; workers load images lazily
    via a per-process cache, so jobs stay cheap to pickle."""

    class_name: str
    index: int
    design_path: str
    backgrounds: tuple[tuple[str, str], ...]  # (background id, path)
    seed: int
    ranges: TransformRanges
    out_dir: str
    emit_mask: bool = True


@lru_cache(maxsize=64)
def _cached_design(path: str) -> RasterImage:
    from .raster import load_design

    return load_design(path)


@lru_cache(maxsize=256)
def _cached_background(path: str) -> RasterImage:
    from .raster import load_image

    img = load_image(path)
    if img.has_alpha:
        img = RasterImage(img.rgb.copy())
    return img


def run_synth_job(job: SynthJob) -> SynthRecord:
    design = _cached_design(job.design_path)
    backgrounds = [(bg_id, _cached_background(p)) for bg_id, p in job.backgrounds]
    return synth_record(
        design, backgrounds, job.class_name, job.index, job.seed, job.ranges,
        job.out_dir, job.emit_mask,
    )


def manifest_from_records(
    records: list[SynthRecord], backgrounds: dict[str, tuple[int, int]]
) -> DatasetManifest:
    """Manifest fragment for a synthetic corpus.

    backgrounds maps background id -> (width, height); composites share their
    background's dimensions.
    """
    manifest = DatasetManifest()
    for rec in records:
        width, height = backgrounds[rec.background_id]
        manifest.images[rec.image_id] = ImageRecord(
            id=rec.image_id,
            path=rec.image_path,
            width=width,
            height=height,
            source=SYNTHETIC_SOURCE,
        )
        manifest.annotations.append(
            Annotation(image_id=rec.image_id, class_name=rec.class_name, box=rec.box)
        )
    return manifest
