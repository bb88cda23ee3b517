"""Seeded photometric and geometric transform bank for logo rendering.

The photometric side (sharpen, median filter, color shift, color reduction)
is shared by the synthetic compositor and the training-pair corruptor; the
geometric side (scale / rotation / shear / optional perspective) is applied
to logo designs only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .raster import RasterImage, SUPPORT_ALPHA_MIN

__all__ = [
    "TransformSpec",
    "TransformRanges",
    "DegenerateTransformError",
    "sample_spec",
    "sharpen",
    "median_filter",
    "color_shift",
    "color_reduce",
    "apply_photometric",
    "transform_logo",
]


class DegenerateTransformError(ValueError):
    """The geometric warp collapsed the design's support to nothing."""


@dataclass(frozen=True)
class TransformSpec:
    """One concrete transform recipe, reproducible from its fields alone.

    perspective, when set, holds 8 corner-offset fractions
    (dx0,dy0,...,dx3,dy3) of the warped width/height, corner order
    top-left, top-right, bottom-right, bottom-left.
    """

    scale: float = 1.0
    rotation_deg: float = 0.0
    shear_x: float = 0.0
    shear_y: float = 0.0
    perspective: tuple[float, ...] | None = None
    sharpen_strength: float = 0.0
    median_kernel: int = 1
    color_shift: tuple[int, int, int] = (0, 0, 0)
    color_levels: int = 256
    seed: int = 0

    def __post_init__(self) -> None:
        if self.scale <= 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        if self.median_kernel < 1 or self.median_kernel % 2 == 0:
            raise ValueError(f"median kernel must be odd and >= 1, got {self.median_kernel}")
        if not 2 <= self.color_levels <= 256:
            raise ValueError(f"color levels must be in [2, 256], got {self.color_levels}")
        if self.perspective is not None and len(self.perspective) != 8:
            raise ValueError("perspective needs 8 corner-offset fractions")

    def is_geometric_identity(self) -> bool:
        return (
            self.scale == 1.0
            and self.rotation_deg == 0.0
            and self.shear_x == 0.0
            and self.shear_y == 0.0
            and self.perspective is None
        )


def _check_range(name: str, lo: float, hi: float) -> None:
    if lo > hi:
        raise ValueError(f"empty range for {name}: ({lo}, {hi})")


@dataclass(frozen=True)
class TransformRanges:
    """Sampling ranges for sample_spec; defaults bracket typical logo scales.

    scale, when None, leaves the factor at 1.0 for the compositor to resolve
    from area_fraction against the chosen background.
    """

    scale: tuple[float, float] | None = None
    area_fraction: tuple[float, float] = (0.01, 0.30)
    rotation_deg: tuple[float, float] = (-25.0, 25.0)
    shear: tuple[float, float] = (-0.15, 0.15)
    perspective_jitter: tuple[float, float] = (0.0, 0.0)
    sharpen: tuple[float, float] = (0.0, 1.0)
    median_kernels: tuple[int, ...] = (1, 3, 5)
    color_shift: tuple[int, int] = (-32, 32)
    color_levels: tuple[int, int] = (16, 256)

    def __post_init__(self) -> None:
        if self.scale is not None:
            _check_range("scale", *self.scale)
            if self.scale[0] <= 0:
                raise ValueError("scale range must be positive")
        _check_range("area_fraction", *self.area_fraction)
        if not 0 < self.area_fraction[0] <= self.area_fraction[1] <= 1:
            raise ValueError("area_fraction range must lie in (0, 1]")
        _check_range("rotation_deg", *self.rotation_deg)
        _check_range("shear", *self.shear)
        _check_range("perspective_jitter", *self.perspective_jitter)
        _check_range("sharpen", *self.sharpen)
        _check_range("color_shift", *self.color_shift)
        _check_range("color_levels", *self.color_levels)
        if not self.median_kernels:
            raise ValueError("median_kernels must not be empty")
        for k in self.median_kernels:
            if k < 1 or k % 2 == 0:
                raise ValueError(f"median kernel {k} must be odd and >= 1")
        if not (-64 <= self.color_shift[0] and self.color_shift[1] <= 64):
            raise ValueError("color_shift range must lie in [-64, 64]")
        if not (2 <= self.color_levels[0] and self.color_levels[1] <= 256):
            raise ValueError("color_levels range must lie in [2, 256]")


def sample_spec(seed: int, ranges: TransformRanges = TransformRanges()) -> TransformSpec:
    """Draw one TransformSpec; identical seeds give identical specs."""
    rng = np.random.default_rng(seed)
    scale = rng.uniform(*ranges.scale) if ranges.scale is not None else 1.0
    rotation = rng.uniform(*ranges.rotation_deg)
    shear_x = rng.uniform(*ranges.shear)
    shear_y = rng.uniform(*ranges.shear)
    perspective = None
    if ranges.perspective_jitter != (0.0, 0.0):
        lo, hi = ranges.perspective_jitter
        perspective = tuple(float(v) for v in rng.uniform(lo, hi, size=8))
    strength = rng.uniform(*ranges.sharpen)
    kernel = int(rng.choice(np.asarray(ranges.median_kernels)))
    shifts = tuple(int(v) for v in rng.integers(
        ranges.color_shift[0], ranges.color_shift[1], size=3, endpoint=True))
    levels = int(rng.integers(
        ranges.color_levels[0], ranges.color_levels[1], endpoint=True))
    return TransformSpec(
        scale=float(scale),
        rotation_deg=float(rotation),
        shear_x=float(shear_x),
        shear_y=float(shear_y),
        perspective=perspective,
        sharpen_strength=float(strength),
        median_kernel=kernel,
        color_shift=shifts,
        color_levels=levels,
        seed=seed,
    )


# --------------------------------------------------------------------------
# Photometric bank.  All ops preserve dimensions, touch RGB only, and carry
# an alpha channel through untouched.
# --------------------------------------------------------------------------

def _round_half_up(x: np.ndarray) -> np.ndarray:
    return np.floor(x + 0.5)


def _with_rgb(img: RasterImage, rgb: np.ndarray) -> RasterImage:
    rgb = rgb.astype(np.uint8)
    if img.has_alpha:
        return RasterImage(np.dstack([rgb, img.alpha]))
    return RasterImage(rgb)


def sharpen(img: RasterImage, strength: float) -> RasterImage:
    """Unsharp masking: out = img + strength * (img - boxblur3(img)).

    The effective kernel (1+s)*delta - s*box has unit weight sum, so flat
    fields pass through unchanged.
    """
    if strength == 0:
        return img
    rgb = img.rgb.astype(np.float64)
    blurred = ndimage.uniform_filter(rgb, size=(3, 3, 1), mode="reflect")
    out = np.clip(_round_half_up(rgb + strength * (rgb - blurred)), 0, 255)
    return _with_rgb(img, out)


def median_filter(img: RasterImage, k: int) -> RasterImage:
    """Per-channel k x k median; k must be odd, k=1 is the identity."""
    if k < 1 or k % 2 == 0:
        raise ValueError(f"median kernel must be odd and >= 1, got {k}")
    if k == 1:
        return img
    out = ndimage.median_filter(img.rgb, size=(k, k, 1), mode="reflect")
    return _with_rgb(img, out)


def color_shift(img: RasterImage, deltas: tuple[int, int, int]) -> RasterImage:
    """Additive per-channel shift, clamped to [0, 255]."""
    if deltas == (0, 0, 0):
        return img
    shifted = img.rgb.astype(np.int16) + np.asarray(deltas, dtype=np.int16)
    return _with_rgb(img, np.clip(shifted, 0, 255))


def color_reduce(img: RasterImage, levels: int) -> RasterImage:
    """Quantize each sample to `levels` evenly spaced values over [0, 255]."""
    if not 2 <= levels <= 256:
        raise ValueError(f"color levels must be in [2, 256], got {levels}")
    if levels == 256:
        return img
    rgb = img.rgb.astype(np.float64)
    q = _round_half_up(rgb * (levels - 1) / 255.0)
    out = _round_half_up(q * 255.0 / (levels - 1))
    return _with_rgb(img, out)


def apply_photometric(img: RasterImage, spec: TransformSpec) -> RasterImage:
    """Sharpening, median filtering, color change, color reduction, in order."""
    img = sharpen(img, spec.sharpen_strength)
    img = median_filter(img, spec.median_kernel)
    img = color_shift(img, spec.color_shift)
    img = color_reduce(img, spec.color_levels)
    return img


# --------------------------------------------------------------------------
# Geometric warp.  Inverse-mapped bilinear resampling at pixel centers;
# alpha is resampled with the same weights but reads zero outside the
# source, so support never leaks past the design bounds.
# --------------------------------------------------------------------------

def _affine_matrix(spec: TransformSpec) -> np.ndarray:
    s = spec.scale
    theta = math.radians(spec.rotation_deg)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    scale = np.array([[s, 0, 0], [0, s, 0], [0, 0, 1]], dtype=np.float64)
    shear = np.array([[1, spec.shear_x, 0], [spec.shear_y, 1, 0], [0, 0, 1]], dtype=np.float64)
    rot = np.array([[cos_t, -sin_t, 0], [sin_t, cos_t, 0], [0, 0, 1]], dtype=np.float64)
    return rot @ shear @ scale


def _homography_from_corners(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    # Standard 8-unknown DLT solve for a 4-point correspondence.
    rows = []
    rhs = []
    for (x, y), (u, v) in zip(src, dst):
        rows.append([x, y, 1, 0, 0, 0, -u * x, -u * y])
        rhs.append(u)
        rows.append([0, 0, 0, x, y, 1, -v * x, -v * y])
        rhs.append(v)
    h = np.linalg.solve(np.asarray(rows, dtype=np.float64), np.asarray(rhs, dtype=np.float64))
    return np.array([[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], 1.0]])


def _forward_matrix(spec: TransformSpec, width: int, height: int) -> np.ndarray:
    affine = _affine_matrix(spec)
    corners = np.array([[0, 0], [width, 0], [width, height], [0, height]], dtype=np.float64)
    mapped = corners @ affine[:2, :2].T
    if spec.perspective is None:
        return affine
    extent = mapped.max(axis=0) - mapped.min(axis=0)
    jitter = np.asarray(spec.perspective, dtype=np.float64).reshape(4, 2) * extent
    return _homography_from_corners(corners, mapped + jitter)


def _map_points(matrix: np.ndarray, pts: np.ndarray) -> np.ndarray:
    homog = np.column_stack([pts, np.ones(len(pts))]) @ matrix.T
    return homog[:, :2] / homog[:, 2:3]


def _bilinear(channel: np.ndarray, u: np.ndarray, v: np.ndarray, outside_zero: bool) -> np.ndarray:
    h, w = channel.shape
    j0 = np.floor(u).astype(np.int64)
    i0 = np.floor(v).astype(np.int64)
    fx = u - j0
    fy = v - i0
    acc = np.zeros(u.shape, dtype=np.float64)
    for di in (0, 1):
        wy = fy if di else 1.0 - fy
        for dj in (0, 1):
            wx = fx if dj else 1.0 - fx
            ii = i0 + di
            jj = j0 + dj
            vals = channel[np.clip(ii, 0, h - 1), np.clip(jj, 0, w - 1)].astype(np.float64)
            if outside_zero:
                inside = (ii >= 0) & (ii < h) & (jj >= 0) & (jj < w)
                vals = np.where(inside, vals, 0.0)
            acc += wy * wx * vals
    return acc


def warp_rgba(img: RasterImage, matrix: np.ndarray) -> RasterImage:
    """Warp an RGBA image onto the tight canvas of its mapped corner bounds."""
    if not img.has_alpha:
        raise ValueError("geometric warp requires an alpha channel")
    corners = np.array(
        [[0, 0], [img.width, 0], [img.width, img.height], [0, img.height]],
        dtype=np.float64,
    )
    mapped = _map_points(matrix, corners)
    lo = mapped.min(axis=0)
    extent = mapped.max(axis=0) - lo
    out_w = max(1, int(math.floor(extent[0] + 1e-6)))
    out_h = max(1, int(math.floor(extent[1] + 1e-6)))
    shift = np.array([[1, 0, -lo[0]], [0, 1, -lo[1]], [0, 0, 1]], dtype=np.float64)
    inv = np.linalg.inv(shift @ matrix)

    xs = np.arange(out_w, dtype=np.float64) + 0.5
    ys = np.arange(out_h, dtype=np.float64) + 0.5
    gx, gy = np.meshgrid(xs, ys)
    denom = inv[2, 0] * gx + inv[2, 1] * gy + inv[2, 2]
    valid = denom > 1e-12
    denom = np.where(valid, denom, 1.0)
    sx = (inv[0, 0] * gx + inv[0, 1] * gy + inv[0, 2]) / denom
    sy = (inv[1, 0] * gx + inv[1, 1] * gy + inv[1, 2]) / denom
    u = sx - 0.5
    v = sy - 0.5

    out = np.empty((out_h, out_w, 4), dtype=np.uint8)
    for c in range(3):
        out[:, :, c] = np.clip(
            _round_half_up(_bilinear(img.pixels[:, :, c], u, v, outside_zero=False)),
            0, 255,
        )
    alpha = _bilinear(img.pixels[:, :, 3], u, v, outside_zero=True)
    alpha = np.where(valid, alpha, 0.0)
    out[:, :, 3] = np.clip(_round_half_up(alpha), 0, 255)
    return RasterImage(out)


def _crop_to_support(img: RasterImage) -> RasterImage:
    support = img.alpha >= SUPPORT_ALPHA_MIN
    if not support.any():
        raise DegenerateTransformError("warp left no alpha support")
    rows = np.flatnonzero(support.any(axis=1))
    cols = np.flatnonzero(support.any(axis=0))
    return RasterImage(img.pixels[rows[0]:rows[-1] + 1, cols[0]:cols[-1] + 1].copy())


def transform_logo(design: RasterImage, spec: TransformSpec) -> RasterImage:
    """Apply a spec to an RGBA logo design.

    Photometric ops run first on the clean design (RGB only), then the
    geometric warp moves RGB and alpha together; the result is cropped to
    the tight bounds of the warped alpha support.
    """
    if not design.has_alpha:
        raise ValueError("logo designs must carry an alpha channel")
    out = apply_photometric(design, spec)
    if spec.is_geometric_identity():
        return out
    matrix = _forward_matrix(spec, design.width, design.height)
    return _crop_to_support(warp_rgba(out, matrix))
