"""8-bit raster images: loading, saving, and alpha keying of logo designs."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

__all__ = ["RasterImage", "load_image", "load_design", "save_png", "save_mask"]

# Alpha value below which a pixel does not count as part of the warped
# support; keeps 1-px resampling halos from inflating emitted boxes.
SUPPORT_ALPHA_MIN = 8

# Channel threshold for keying near-white design backgrounds to transparent.
WHITE_KEY_MIN = 250


@dataclass(frozen=True)
class RasterImage:
    """An 8-bit image, HxWx3 (RGB) or HxWx4 (RGBA), numpy-backed."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        px = self.pixels
        if px.dtype != np.uint8 or px.ndim != 3 or px.shape[2] not in (3, 4):
            raise ValueError("pixels must be uint8 with shape (H, W, 3|4)")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    @property
    def has_alpha(self) -> bool:
        return self.channels == 4

    @property
    def rgb(self) -> np.ndarray:
        return self.pixels[:, :, :3]

    @property
    def alpha(self) -> np.ndarray:
        if not self.has_alpha:
            raise ValueError("image has no alpha channel")
        return self.pixels[:, :, 3]


def load_image(path: str | Path) -> RasterImage:
    """Load a PNG/JPEG image; grayscale is promoted to RGB, palette resolved."""
    with Image.open(path) as im:
        if im.mode in ("RGBA", "LA", "PA") or "transparency" in im.info:
            im = im.convert("RGBA")
        else:
            im = im.convert("RGB")
        return RasterImage(np.asarray(im, dtype=np.uint8).copy())


def key_white_to_alpha(img: RasterImage, threshold: int = WHITE_KEY_MIN) -> RasterImage:
    """Turn near-white pixels (all channels >= threshold) fully transparent."""
    rgb = img.rgb
    white = np.all(rgb >= threshold, axis=2)
    alpha = np.where(white, 0, 255).astype(np.uint8)
    return RasterImage(np.dstack([rgb, alpha]))


def load_design(path: str | Path) -> RasterImage:
    """Load a logo design image, guaranteeing an alpha support mask.

    Designs sourced from image search usually sit on a white background with
    no alpha channel; those are keyed so the compositor has a support mask.
    """
    img = load_image(path)
    if img.has_alpha:
        return img
    return key_white_to_alpha(img)


def save_png(img: RasterImage | np.ndarray, path: str | Path) -> None:
    """Write a PNG with fixed encoder settings so output bytes are stable."""
    pixels = img.pixels if isinstance(img, RasterImage) else img
    mode = {3: "RGB", 4: "RGBA"}[pixels.shape[2]]
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(pixels, mode=mode).save(path, format="PNG", compress_level=6)


def save_mask(mask: np.ndarray, path: str | Path) -> None:
    """Write a single-channel binary mask PNG (255 = region)."""
    if mask.dtype != np.uint8 or mask.ndim != 2:
        raise ValueError("mask must be uint8 with shape (H, W)")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(mask, mode="L").save(path, format="PNG", compress_level=6)


def load_mask(path: str | Path) -> np.ndarray:
    """Load a single-channel mask PNG as uint8 (H, W)."""
    with Image.open(path) as im:
        return np.asarray(im.convert("L"), dtype=np.uint8).copy()
