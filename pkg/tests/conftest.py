from __future__ import annotations

import numpy as np
import pytest

from logokit.core import Annotation, BoundingBox, DatasetManifest, ImageRecord
from logokit.raster import RasterImage, save_png


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def design():
    """16x12 opaque RGBA design with distinct channel gradients."""
    h, w = 12, 16
    px = np.zeros((h, w, 4), dtype=np.uint8)
    yy, xx = np.mgrid[0:h, 0:w]
    px[:, :, 0] = (xx * 16) % 256
    px[:, :, 1] = (yy * 20) % 256
    px[:, :, 2] = ((xx + yy) * 11) % 256
    px[:, :, 3] = 255
    return RasterImage(px)


@pytest.fixture
def ring_design():
    """Design with a transparent hole and transparent margin: support is not
    the full rectangle."""
    px = np.zeros((20, 20, 4), dtype=np.uint8)
    px[:, :, :3] = 180
    px[4:16, 4:16, 3] = 255
    px[8:12, 8:12, 3] = 0
    return RasterImage(px)


def make_photo(width: int, height: int, seed: int = 0) -> RasterImage:
    """Noisy natural-ish RGB image (flat fields hide photometric bugs)."""
    gen = np.random.default_rng(seed)
    base = gen.integers(0, 256, size=(height, width, 3))
    smooth = base.copy().astype(np.float64)
    for _ in range(2):
        smooth = (
            np.roll(smooth, 1, axis=0) + np.roll(smooth, -1, axis=0)
            + np.roll(smooth, 1, axis=1) + np.roll(smooth, -1, axis=1)
        ) / 4.0
    return RasterImage(np.clip(smooth, 0, 255).astype(np.uint8))


@pytest.fixture
def background():
    return make_photo(96, 72, seed=7)


@pytest.fixture
def backgrounds():
    return [
        ("bg0", make_photo(96, 72, seed=7)),
        ("bg1", make_photo(120, 80, seed=8)),
        ("bg2", make_photo(80, 100, seed=9)),
    ]


@pytest.fixture
def photo_dir(tmp_path):
    """Directory of photo PNGs for CLI-level tests."""
    d = tmp_path / "photos"
    for i in range(3):
        save_png(make_photo(64 + 8 * i, 48 + 8 * i, seed=20 + i), d / f"photo{i}.png")
    return d


def make_manifest(spec: dict[str, dict]) -> DatasetManifest:
    """Manifest from {image_id: {"size": (w, h), "source": str,
    "boxes": [(class, xmin, ymin, xmax, ymax), ...]}}."""
    manifest = DatasetManifest()
    for image_id, info in spec.items():
        w, h = info.get("size", (100, 100))
        manifest.images[image_id] = ImageRecord(
            id=image_id, path=f"{image_id}.jpg", width=w, height=h,
            source=info.get("source", "fixture"),
        )
        for cls, xmin, ymin, xmax, ymax in info.get("boxes", []):
            manifest.annotations.append(Annotation(
                image_id=image_id, class_name=cls,
                box=BoundingBox(xmin, ymin, xmax, ymax),
            ))
    return manifest
