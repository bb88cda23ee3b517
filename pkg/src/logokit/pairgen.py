"""Training-pair generation: corrupt one region of a natural image with the
photometric transform bank, keeping every pixel outside the region intact.

Two region sources mirror the two kinds of input data: random rectangles on
logo-free photos, and object foreground masks on segmented photos.  No human
labels are consumed.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .core import DatasetManifest
from .raster import RasterImage, load_image, load_mask, save_mask, save_png
from .seeds import derive_rng
from .transforms import TransformRanges, TransformSpec, apply_photometric, sample_spec
from .util import parallel_map

__all__ = [
    "RandomRectangle",
    "ForegroundMask",
    "PairRecord",
    "RegionError",
    "rasterize_region",
    "make_pair",
    "build_pair_set",
    "read_pair_manifest",
]

log = logging.getLogger(__name__)

MAX_REGION_ATTEMPTS = 100
SOURCE_NON_LOGO = "non-logo"
SOURCE_MASKED = "masked-object"


class RegionError(ValueError):
    """Region constraints unsatisfiable or rasterization came out empty."""


@dataclass(frozen=True)
class RandomRectangle:
    """Axis-aligned rectangle region: area fraction and aspect (w/h) ranges."""

    area_fraction: tuple[float, float] = (0.02, 0.25)
    aspect: tuple[float, float] = (0.5, 2.0)

    def __post_init__(self) -> None:
        lo, hi = self.area_fraction
        if not 0 < lo <= hi <= 1:
            raise ValueError(f"area fraction range must lie in (0, 1], got {self.area_fraction}")
        alo, ahi = self.aspect
        if not 0 < alo <= ahi:
            raise ValueError(f"aspect range must be positive, got {self.aspect}")


@dataclass(frozen=True)
class ForegroundMask:
    """Object-foreground region given as a polygon, an uncompressed RLE, or
    a mask image path; exactly one must be set."""

    polygon: tuple[tuple[float, float], ...] | None = None
    rle: dict | None = None
    mask_path: str | None = None

    def __post_init__(self) -> None:
        given = sum(x is not None for x in (self.polygon, self.rle, self.mask_path))
        if given != 1:
            raise ValueError("exactly one of polygon, rle, mask_path must be set")


@dataclass(frozen=True)
class PairRecord:
    """A (clean, corrupted, mask) triple on disk plus its provenance."""

    clean_path: str
    corrupted_path: str
    mask_path: str
    spec: TransformSpec
    source: str
    seed: int


def _decode_rle(rle: dict, width: int, height: int) -> np.ndarray:
    """Uncompressed column-major RLE: alternating background/foreground runs."""
    size = rle.get("size")
    counts = rle.get("counts")
    if size is None or counts is None:
        raise RegionError("RLE spec needs 'size' and 'counts'")
    rh, rw = int(size[0]), int(size[1])
    if (rh, rw) != (height, width):
        raise RegionError(f"RLE size {rh}x{rw} does not match image {height}x{width}")
    total = sum(counts)
    if total != rw * rh:
        raise RegionError(f"RLE counts sum to {total}, expected {rw * rh}")
    flat = np.zeros(rw * rh, dtype=np.uint8)
    pos = 0
    value = 0
    for run in counts:
        if value:
            flat[pos:pos + run] = 255
        pos += run
        value ^= 1
    return flat.reshape((rw, rh)).T.copy()


def _rasterize_polygon(
    polygon: tuple[tuple[float, float], ...], width: int, height: int
) -> np.ndarray:
    if len(polygon) < 3:
        raise RegionError("polygon needs at least 3 points")
    canvas = Image.new("L", (width, height), 0)
    ImageDraw.Draw(canvas).polygon([(float(x), float(y)) for x, y in polygon], fill=255)
    return np.asarray(canvas, dtype=np.uint8)


def rasterize_region(
    src: RandomRectangle | ForegroundMask,
    width: int,
    height: int,
    seed: int,
) -> np.ndarray:
    """Binary uint8 mask (255 = region) for an image of the given dimensions."""
    if width <= 0 or height <= 0:
        raise ValueError("image dimensions must be positive")
    if isinstance(src, ForegroundMask):
        if src.polygon is not None:
            mask = _rasterize_polygon(src.polygon, width, height)
        elif src.rle is not None:
            mask = _decode_rle(src.rle, width, height)
        else:
            raw = load_mask(src.mask_path)
            if raw.shape != (height, width):
                raise RegionError(
                    f"mask {src.mask_path} is {raw.shape[1]}x{raw.shape[0]}, "
                    f"image is {width}x{height}"
                )
            mask = np.where(raw >= 128, 255, 0).astype(np.uint8)
        if not mask.any():
            raise RegionError("region mask is empty after rasterization")
        return mask

    rng = derive_rng(seed, "region")
    for _ in range(MAX_REGION_ATTEMPTS):
        frac = rng.uniform(*src.area_fraction)
        aspect = rng.uniform(*src.aspect)
        area = frac * width * height
        rw = int(np.floor(np.sqrt(area * aspect) + 0.5))
        rh = int(np.floor(np.sqrt(area / aspect) + 0.5))
        rw, rh = max(1, rw), max(1, rh)
        if rw > width or rh > height:
            continue
        x = int(rng.integers(0, width - rw + 1))
        y = int(rng.integers(0, height - rh + 1))
        mask = np.zeros((height, width), dtype=np.uint8)
        mask[y:y + rh, x:x + rw] = 255
        return mask
    raise RegionError(
        f"no rectangle satisfying fraction {src.area_fraction} and aspect "
        f"{src.aspect} fits a {width}x{height} image after "
        f"{MAX_REGION_ATTEMPTS} attempts"
    )


def make_pair(img: RasterImage, mask: np.ndarray, spec: TransformSpec) -> RasterImage:
    """Corrupted copy of img: photometric bank inside the mask, untouched
    elsewhere.  Geometric fields of the spec are ignored so the pair stays
    pixel-registered."""
    if mask.shape != (img.height, img.width):
        raise ValueError(
            f"mask {mask.shape[1]}x{mask.shape[0]} does not match image "
            f"{img.width}x{img.height}"
        )
    transformed = apply_photometric(RasterImage(img.rgb.copy()), spec)
    region = mask > 0
    out = img.rgb.copy()
    out[region] = transformed.pixels[region]
    return RasterImage(out)


def _pair_images(manifest: DatasetManifest) -> list[tuple[str, str]]:
    return sorted((rec.id, rec.path) for rec in manifest.images.values())


@dataclass(frozen=True)
class PairJob:
    image_id: str
    image_path: str
    region_src: RandomRectangle | ForegroundMask
    source: str
    index: int
    seed: int
    ranges: TransformRanges
    out_dir: str


def _run_pair_job(job: PairJob) -> PairRecord:
    return _generate_pair(
        job.image_id, job.image_path, job.region_src, job.source, job.index,
        job.seed, job.ranges, Path(job.out_dir),
    )


def _generate_pair(
    image_id: str,
    image_path: str,
    region_src: RandomRectangle | ForegroundMask,
    source: str,
    index: int,
    seed: int,
    ranges: TransformRanges,
    out_dir: Path,
) -> PairRecord:
    rng = derive_rng(seed, source, index)
    img = load_image(image_path)
    if img.has_alpha:
        img = RasterImage(img.rgb.copy())
    mask = rasterize_region(region_src, img.width, img.height, int(rng.integers(0, 2**62)))

    region = mask > 0
    corrupted = img
    spec = None
    for _ in range(MAX_REGION_ATTEMPTS):
        spec_seed = int(rng.integers(0, 2**62))
        spec = sample_spec(spec_seed, ranges)
        corrupted = make_pair(img, mask, spec)
        if np.any(corrupted.pixels[region] != img.pixels[region]):
            break
    else:
        raise RegionError(
            f"photometric bank never altered {image_id}; widen the transform ranges"
        )

    # Relative paths keep the pair manifest identical across output roots.
    stem = f"{source}_{index:05d}"
    rel_clean = f"clean/{stem}.png"
    rel_corrupted = f"corrupted/{stem}.png"
    rel_mask = f"masks/{stem}.png"
    save_png(img, out_dir / rel_clean)
    save_png(corrupted, out_dir / rel_corrupted)
    save_mask(mask, out_dir / rel_mask)
    return PairRecord(
        clean_path=rel_clean,
        corrupted_path=rel_corrupted,
        mask_path=rel_mask,
        spec=spec,
        source=source,
        seed=seed,
    )


def build_pair_set(
    non_logo_manifest: DatasetManifest,
    masked_manifest: DatasetManifest,
    n_per_source: int,
    seed: int,
    out_dir: str | Path,
    rect_source: RandomRectangle = RandomRectangle(),
    regions: dict[str, ForegroundMask] | None = None,
    ranges: TransformRanges = TransformRanges(),
    workers: int = 1,
) -> list[PairRecord]:
    """Generate n_per_source pairs from each source and write a JSONL manifest.

    Non-logo images take random rectangles; masked images take the foreground
    region supplied per image id in `regions`.  Small sources wrap around
    (sampling with replacement) rather than failing.  Items are independently
    seeded, so any worker count produces the same bytes.
    """
    if n_per_source < 1:
        raise ValueError("n_per_source must be >= 1")
    out_dir = Path(out_dir)
    regions = regions or {}

    non_logo = _pair_images(non_logo_manifest)
    masked = [(i, p) for i, p in _pair_images(masked_manifest) if i in regions]
    if not non_logo:
        raise ValueError("non-logo source has no images")
    if not masked:
        raise ValueError("masked source has no images with region specs")

    jobs = []
    for source, pool in ((SOURCE_NON_LOGO, non_logo), (SOURCE_MASKED, masked)):
        if n_per_source > len(pool):
            log.info(
                "source %s has %d images for %d pairs; sampling with replacement",
                source, len(pool), n_per_source,
            )
        for i in range(n_per_source):
            image_id, image_path = pool[i % len(pool)]
            region_src = rect_source if source == SOURCE_NON_LOGO else regions[image_id]
            jobs.append(PairJob(
                image_id=image_id, image_path=image_path, region_src=region_src,
                source=source, index=i, seed=seed, ranges=ranges,
                out_dir=str(out_dir),
            ))
    records = parallel_map(_run_pair_job, jobs, workers)

    manifest_path = out_dir / "pairs.jsonl"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps({
                "clean": rec.clean_path,
                "corrupted": rec.corrupted_path,
                "mask": rec.mask_path,
                "source": rec.source,
                "seed": rec.seed,
            }, separators=(",", ":")) + "\n")
    return records


def read_pair_manifest(path: str | Path) -> list[dict]:
    """Rows of a pair manifest: {clean, corrupted, mask, source, seed}."""
    rows = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not raw.strip():
            continue
        row = json.loads(raw)
        for field in ("clean", "corrupted", "mask", "source", "seed"):
            if field not in row:
                raise ValueError(f"pair manifest line {lineno} is missing {field!r}")
        rows.append(row)
    return rows
