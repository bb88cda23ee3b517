"""Context rendering of composite images with a trained generator.

Rendering never touches annotations: a corpus render copies every record's
box coordinates into the output manifest and only the image pixels change.
The region mask is mandatory; it is the generator's fourth input channel.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .data import letterbox, tensor_to_image, to_input_tensor, unletterbox
from .model import UNetGenerator
from .train import load_checkpoint

__all__ = ["render_image", "render_corpus"]


def render_image(
    generator: UNetGenerator, rgb: np.ndarray, mask: np.ndarray | None
) -> np.ndarray:
    """Render one image; output dimensions equal the input's."""
    if mask is None:
        raise ValueError("a region mask is required (4th input channel)")
    if mask.shape != rgb.shape[:2]:
        raise ValueError("mask dimensions must match the image")
    size = generator.cfg.resolution
    rgb_lb, geom = letterbox(rgb, size)
    mask_lb, _ = letterbox(mask, size, nearest=True)
    x = to_input_tensor(rgb_lb, mask_lb).unsqueeze(0)
    generator.eval()
    with torch.no_grad():
        out = generator(x)[0]
    return unletterbox(tensor_to_image(out), geom)


def _read_image_records(manifest_path: Path) -> tuple[list[dict], list[str]]:
    """Image and annotation lines of a dataset manifest (kind-discriminated
    JSONL); annotations pass through untouched."""
    images = []
    passthrough = []
    for raw in manifest_path.read_text(encoding="utf-8").splitlines():
        if not raw.strip():
            continue
        row = json.loads(raw)
        if row.get("kind") == "image":
            images.append(row)
        else:
            passthrough.append(raw)
    return images, passthrough


def render_corpus(
    checkpoint_path: str | Path,
    manifest_path: str | Path,
    out_dir: str | Path,
    masks_dir: str | Path | None = None,
) -> int:
    """Render every image of a composite-corpus manifest.

    Masks are looked up as <masks_dir>/<image id>.png (default: the masks/
    directory next to the manifest).  Writes rendered PNGs plus a manifest
    whose annotations are byte-for-byte the input ones.
    """
    manifest_path = Path(manifest_path)
    out_dir = Path(out_dir)
    base = manifest_path.parent
    masks_dir = Path(masks_dir) if masks_dir is not None else base / "masks"
    generator, _ = load_checkpoint(checkpoint_path)

    images, passthrough = _read_image_records(manifest_path)
    out_lines = []
    for row in images:
        image_path = Path(row["path"])
        if not image_path.is_absolute():
            image_path = base / image_path
        mask_path = masks_dir / f"{row['id']}.png"
        if not mask_path.exists():
            raise FileNotFoundError(
                f"no region mask for image {row['id']!r} at {mask_path}"
            )
        with Image.open(image_path) as im:
            rgb = np.asarray(im.convert("RGB"), dtype=np.uint8)
        with Image.open(mask_path) as im:
            mask = np.asarray(im.convert("L"), dtype=np.uint8)
        rendered = render_image(generator, rgb, mask)
        rel = f"images/{row['id']}.png"
        target = out_dir / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(rendered, "RGB").save(target, format="PNG", compress_level=6)
        out_row = dict(row)
        out_row["path"] = rel
        out_lines.append(json.dumps(out_row, separators=(",", ":"), ensure_ascii=False))

    out_lines.extend(passthrough)
    (out_dir / "manifest.jsonl").write_text(
        "".join(line + "\n" for line in out_lines), encoding="utf-8")
    return len(images)
