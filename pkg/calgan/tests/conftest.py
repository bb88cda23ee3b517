from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest
from PIL import Image


def smooth_photo(width: int, height: int, seed: int) -> np.ndarray:
    gen = np.random.default_rng(seed)
    base = gen.integers(0, 256, size=(height, width, 3)).astype(np.float64)
    for _ in range(2):
        base = (
            np.roll(base, 1, 0) + np.roll(base, -1, 0)
            + np.roll(base, 1, 1) + np.roll(base, -1, 1)
        ) / 4.0
    return np.clip(base, 0, 255).astype(np.uint8)


def lowfreq_photo(width: int, height: int, seed: int, detail: int = 8) -> np.ndarray:
    """Upsampled coarse noise: content representable below the first skip's
    resolution, so an identity mapping is actually attainable."""
    gen = np.random.default_rng(seed)
    small = gen.integers(
        0, 256, size=(max(2, height // detail), max(2, width // detail), 3)
    ).astype(np.uint8)
    return np.asarray(
        Image.fromarray(small, "RGB").resize((width, height), Image.BILINEAR),
        dtype=np.uint8,
    )


def write_pair_corpus(
    root: Path, n_pairs: int, size: tuple[int, int] = (72, 64),
    identity: bool = False,
) -> Path:
    """Hand-built (clean, corrupted, mask) corpus plus its JSONL manifest.

    Corruption is a channel shift inside a rectangle; with identity=True the
    corrupted copy equals the clean image (for identity-pretraining tests)
    and the photos carry only low-frequency content.
    """
    w, h = size
    rows = []
    for i in range(n_pairs):
        photo = lowfreq_photo if identity else smooth_photo
        clean = photo(w, h, seed=1000 + i)
        mask = np.zeros((h, w), dtype=np.uint8)
        x0, y0 = 8 + (i % 4), 6 + (i % 3)
        mask[y0:y0 + h // 2, x0:x0 + w // 2] = 255
        corrupted = clean.copy()
        if not identity:
            region = mask > 0
            shifted = np.clip(clean.astype(np.int16) + np.array([25, -20, 10]), 0, 255)
            corrupted[region] = shifted.astype(np.uint8)[region]
        for sub, img in (("clean", clean), ("corrupted", corrupted)):
            path = root / sub / f"p{i:03d}.png"
            path.parent.mkdir(parents=True, exist_ok=True)
            Image.fromarray(img, "RGB").save(path)
        mask_path = root / "masks" / f"p{i:03d}.png"
        mask_path.parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(mask, "L").save(mask_path)
        rows.append({
            "clean": f"clean/p{i:03d}.png",
            "corrupted": f"corrupted/p{i:03d}.png",
            "mask": f"masks/p{i:03d}.png",
            "source": "non-logo" if i % 2 == 0 else "masked-object",
            "seed": i,
        })
    manifest = root / "pairs.jsonl"
    manifest.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
    return manifest


@pytest.fixture
def pair_corpus(tmp_path):
    return write_pair_corpus(tmp_path / "pairs", n_pairs=16)


@pytest.fixture(scope="session")
def toy_configs():
    from calgan.model import DiscriminatorConfig, GeneratorConfig

    return (
        GeneratorConfig(base_width=8),
        DiscriminatorConfig(base_width=8),
    )
