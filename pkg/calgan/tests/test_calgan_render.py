import json

import numpy as np
import pytest
import torch

from calgan.model import UNetGenerator
from calgan.render import render_corpus, render_image
from calgan.train import TrainConfig, save_checkpoint, train

from .conftest import lowfreq_photo, write_pair_corpus


@pytest.fixture(scope="module")
def trained(tmp_path_factory, toy_configs):
    root = tmp_path_factory.mktemp("train")
    manifest = write_pair_corpus(root, n_pairs=8)
    result = train(manifest, *toy_configs,
                   TrainConfig(steps=3, batch_size=2, seed=0))
    ckpt = root / "model.pt"
    save_checkpoint(result, ckpt)
    return result.generator, ckpt


class TestRenderImage:
    def test_missing_mask_refused(self, trained):
        generator, _ = trained
        img = lowfreq_photo(64, 48, seed=1)
        with pytest.raises(ValueError, match="mask"):
            render_image(generator, img, None)

    def test_mask_dimension_mismatch_refused(self, trained):
        generator, _ = trained
        img = lowfreq_photo(64, 48, seed=1)
        with pytest.raises(ValueError, match="match"):
            render_image(generator, img, np.zeros((10, 10), dtype=np.uint8))

    def test_output_dims_equal_input_dims(self, trained):
        generator, _ = trained
        for w, h in ((64, 48), (100, 30), (256, 256)):
            img = lowfreq_photo(w, h, seed=2)
            out = render_image(generator, img, np.zeros((h, w), dtype=np.uint8))
            assert out.shape == (h, w, 3)
            assert out.dtype == np.uint8

    def test_deterministic(self, trained):
        generator, _ = trained
        img = lowfreq_photo(80, 60, seed=3)
        mask = np.zeros((60, 80), dtype=np.uint8)
        mask[10:40, 20:60] = 255
        assert np.array_equal(render_image(generator, img, mask),
                              render_image(generator, img, mask))


def write_composite_corpus(root, n_images=3):
    """Minimal composite-corpus layout: images/, masks/, manifest.jsonl with
    image and annotation records."""
    from PIL import Image

    lines = []
    for i in range(n_images):
        image_id = f"brand_{i:05d}"
        img = lowfreq_photo(72, 56, seed=700 + i)
        (root / "images").mkdir(parents=True, exist_ok=True)
        Image.fromarray(img, "RGB").save(root / "images" / f"{image_id}.png")
        mask = np.zeros((56, 72), dtype=np.uint8)
        mask[10:30, 12:40] = 255
        (root / "masks").mkdir(parents=True, exist_ok=True)
        Image.fromarray(mask, "L").save(root / "masks" / f"{image_id}.png")
        lines.append(json.dumps({
            "kind": "image", "id": image_id, "path": f"images/{image_id}.png",
            "width": 72, "height": 56, "source": "synthetic",
        }))
        lines.append(json.dumps({
            "kind": "annotation", "image_id": image_id, "class": "brand",
            "xmin": 12.0, "ymin": 10.0, "xmax": 40.0, "ymax": 30.0,
        }))
    manifest = root / "manifest.jsonl"
    manifest.write_text("\n".join(lines) + "\n")
    return manifest


class TestRenderCorpus:
    def test_preserves_records_and_boxes(self, trained, tmp_path):
        _, ckpt = trained
        manifest = write_composite_corpus(tmp_path / "corpus")
        out = tmp_path / "rendered"
        count = render_corpus(ckpt, manifest, out)
        assert count == 3
        rendered_rows = [json.loads(l) for l in
                         (out / "manifest.jsonl").read_text().splitlines()]
        images = [r for r in rendered_rows if r["kind"] == "image"]
        anns = [r for r in rendered_rows if r["kind"] == "annotation"]
        assert len(images) == 3 and len(anns) == 3
        source_anns = [json.loads(l) for l in manifest.read_text().splitlines()
                       if json.loads(l)["kind"] == "annotation"]
        assert anns == source_anns  # boxes are metadata; rendering never moves them
        for row in images:
            assert (out / row["path"]).exists()

    def test_missing_mask_file_refused(self, trained, tmp_path):
        _, ckpt = trained
        manifest = write_composite_corpus(tmp_path / "corpus")
        (tmp_path / "corpus" / "masks" / "brand_00001.png").unlink()
        with pytest.raises(FileNotFoundError, match="brand_00001"):
            render_corpus(ckpt, manifest, tmp_path / "rendered")


class TestIdentityPretraining:
    def test_zero_mask_render_stays_close_to_input(self, toy_configs, tmp_path):
        manifest = write_pair_corpus(tmp_path / "ident", n_pairs=16, identity=True)
        result = train(manifest, *toy_configs, TrainConfig(
            steps=150, batch_size=4, seed=1, learning_rate=2e-3))
        probe = lowfreq_photo(72, 64, seed=9999)
        out = render_image(result.generator, probe,
                           np.zeros((64, 72), dtype=np.uint8))
        l1 = float(np.abs(out.astype(np.int32) - probe.astype(np.int32)).mean()) / 255.0
        assert l1 < 0.05
