"""Pair-corpus loading: JSONL manifest rows ({clean, corrupted, mask, source,
seed}), PNG triples, letterboxing to the network resolution, and tensor
conversion.

Images normalize to [-1, 1]; masks ride along as a {0, 1} channel and are
resized nearest-neighbor so they stay binary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image

__all__ = [
    "PairSample",
    "read_pair_manifest",
    "load_rgb",
    "load_mask",
    "letterbox",
    "unletterbox",
    "to_input_tensor",
    "to_target_tensor",
    "tensor_to_image",
    "PairDataset",
]


@dataclass(frozen=True)
class PairSample:
    clean: str
    corrupted: str
    mask: str
    source: str
    seed: int


def read_pair_manifest(path: str | Path) -> list[PairSample]:
    """Rows of a pair manifest with paths resolved against its directory."""
    base = Path(path).parent
    samples = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not raw.strip():
            continue
        row = json.loads(raw)
        try:
            samples.append(PairSample(
                clean=str(_resolve(base, row["clean"])),
                corrupted=str(_resolve(base, row["corrupted"])),
                mask=str(_resolve(base, row["mask"])),
                source=str(row["source"]),
                seed=int(row["seed"]),
            ))
        except KeyError as exc:
            raise ValueError(f"{path} line {lineno}: missing field {exc}") from exc
    if not samples:
        raise ValueError(f"pair manifest {path} is empty")
    return samples


def _resolve(base: Path, p: str) -> Path:
    path = Path(p)
    return path if path.is_absolute() else base / path


def load_rgb(path: str | Path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def load_mask(path: str | Path) -> np.ndarray:
    with Image.open(path) as im:
        raw = np.asarray(im.convert("L"), dtype=np.uint8)
    return (raw >= 128).astype(np.uint8) * 255


@dataclass(frozen=True)
class LetterboxGeometry:
    """How an image was fitted into the square working canvas."""

    scaled_w: int
    scaled_h: int
    pad_x: int
    pad_y: int
    orig_w: int
    orig_h: int


def letterbox(
    img: np.ndarray, size: int, nearest: bool = False
) -> tuple[np.ndarray, LetterboxGeometry]:
    """Aspect-preserving resize onto a size x size canvas, zero-padded."""
    h, w = img.shape[:2]
    scale = min(size / w, size / h)
    scaled_w = max(1, int(round(w * scale)))
    scaled_h = max(1, int(round(h * scale)))
    resample = Image.NEAREST if nearest else Image.BILINEAR
    mode = "L" if img.ndim == 2 else "RGB"
    resized = np.asarray(
        Image.fromarray(img, mode=mode).resize((scaled_w, scaled_h), resample),
        dtype=np.uint8,
    )
    pad_x = (size - scaled_w) // 2
    pad_y = (size - scaled_h) // 2
    shape = (size, size) if img.ndim == 2 else (size, size, img.shape[2])
    canvas = np.zeros(shape, dtype=np.uint8)
    canvas[pad_y:pad_y + scaled_h, pad_x:pad_x + scaled_w] = resized
    return canvas, LetterboxGeometry(scaled_w, scaled_h, pad_x, pad_y, w, h)


def unletterbox(canvas: np.ndarray, geom: LetterboxGeometry) -> np.ndarray:
    """Crop the letterbox padding and resize back to the original dims."""
    crop = canvas[geom.pad_y:geom.pad_y + geom.scaled_h,
                  geom.pad_x:geom.pad_x + geom.scaled_w]
    mode = "L" if crop.ndim == 2 else "RGB"
    return np.asarray(
        Image.fromarray(crop, mode=mode).resize((geom.orig_w, geom.orig_h), Image.BILINEAR),
        dtype=np.uint8,
    )


def to_input_tensor(rgb: np.ndarray, mask: np.ndarray) -> torch.Tensor:
    """(4, H, W) float tensor: RGB in [-1, 1] plus a {0, 1} mask channel."""
    if rgb.shape[:2] != mask.shape:
        raise ValueError("image and mask dimensions differ")
    image = torch.from_numpy(rgb.astype(np.float32)).permute(2, 0, 1) / 127.5 - 1.0
    region = torch.from_numpy((mask > 0).astype(np.float32)).unsqueeze(0)
    return torch.cat([image, region], dim=0)


def to_target_tensor(rgb: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(rgb.astype(np.float32)).permute(2, 0, 1) / 127.5 - 1.0


def tensor_to_image(tensor: torch.Tensor) -> np.ndarray:
    """(3, H, W) in [-1, 1] back to HxWx3 uint8."""
    array = ((tensor.detach().cpu().clamp(-1, 1) + 1.0) * 127.5).round()
    return array.permute(1, 2, 0).numpy().astype(np.uint8)


class PairDataset:
    """Letterboxed tensors for every pair in a manifest.

    x is the corrupted image + mask (4 channels), y the clean image; both
    share the letterbox geometry since pairs are pixel-registered.
    """

    def __init__(self, samples: list[PairSample], resolution: int):
        self.samples = samples
        self.resolution = resolution

    def __len__(self) -> int:
        return len(self.samples)

    def __getitem__(self, index: int) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        sample = self.samples[index]
        corrupted = load_rgb(sample.corrupted)
        clean = load_rgb(sample.clean)
        mask = load_mask(sample.mask)
        if clean.shape != corrupted.shape or mask.shape != clean.shape[:2]:
            raise ValueError(f"pair {sample.clean} images/mask dimensions disagree")
        corrupted_lb, _ = letterbox(corrupted, self.resolution)
        clean_lb, _ = letterbox(clean, self.resolution)
        mask_lb, _ = letterbox(mask, self.resolution, nearest=True)
        x = to_input_tensor(corrupted_lb, mask_lb)
        y = to_target_tensor(clean_lb)
        region = torch.from_numpy((mask_lb > 0).astype(np.float32)).unsqueeze(0)
        return x, y, region

    def batch(self, indices: list[int]) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        xs, ys, ms = zip(*(self[i] for i in indices))
        return torch.stack(xs), torch.stack(ys), torch.stack(ms)
