"""Acceptance suite: one test per release criterion, each printing a
[PASS]/[FAIL] line (visible with `pytest -s tests/test_acceptance.py`)."""

from __future__ import annotations

import functools
import json
import time
from pathlib import Path

import numpy as np
import pytest

from logokit.core import (
    Annotation,
    BoundingBox,
    Detection,
    iou,
    read_manifest,
    validate_annotation,
    write_manifest,
)
from logokit.bench import SplitPlan, split
from logokit.cli import main
from logokit.evaluation import EvalConfig, evaluate
from logokit.pairgen import build_pair_set
from logokit.raster import load_image, load_mask, save_png
from logokit.synth import manifest_from_records, plan_jobs, synth_class
from logokit.transforms import TransformRanges

from .conftest import make_manifest, make_photo
from .oracles import evaluate_per_class, rasterized_iou
from .test_bench import open_fixture
from .test_cli import make_background_dir, tree_bytes, write_registry_fixture


def criterion(name):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"[FAIL] {name}")
                raise
            print(f"[PASS] {name}")
        return wrapper
    return deco


@criterion("AP oracle equivalence on 200 randomized micro-fixtures")
def test_ap_oracle_equivalence():
    started = time.perf_counter()
    for trial in range(200):
        gen = np.random.default_rng(10_000 + trial)
        image_ids = [f"im{i}" for i in range(int(gen.integers(1, 4)))]
        classes = ["alpha", "beta"][: int(gen.integers(1, 3))]
        spec = {}
        gt_dicts = []
        n_gt = int(gen.integers(1, 6))
        for image_id in image_ids:
            spec[image_id] = {"size": (100, 100), "boxes": []}
        for _ in range(n_gt):
            image_id = image_ids[int(gen.integers(len(image_ids)))]
            cls = classes[int(gen.integers(len(classes)))]
            x, y = (int(v) for v in gen.integers(0, 60, size=2))
            w, h = (int(v) for v in gen.integers(5, 40, size=2))
            spec[image_id]["boxes"].append((cls, x, y, x + w, y + h))
            gt_dicts.append({"image_id": image_id, "class": cls,
                             "box": (float(x), float(y), float(x + w), float(y + h))})
        manifest = make_manifest(spec)
        manifest.splits = {"test": sorted(manifest.images)}

        dets, det_dicts = [], []
        for _ in range(int(gen.integers(0, 11))):
            image_id = image_ids[int(gen.integers(len(image_ids)))]
            cls = classes[int(gen.integers(len(classes)))]
            x, y = (int(v) for v in gen.integers(0, 60, size=2))
            w, h = (int(v) for v in gen.integers(5, 40, size=2))
            score = round(float(gen.uniform(0.01, 1.0)), 3)
            dets.append(Detection(image_id, cls, BoundingBox(x, y, x + w, y + h), score))
            det_dicts.append({"image_id": image_id, "class": cls, "score": score,
                              "box": (float(x), float(y), float(x + w), float(y + h))})

        report = evaluate(dets, manifest)
        expected = evaluate_per_class(det_dicts, gt_dicts, threshold=0.5)
        for cls, ap in expected.items():
            got = report.per_class_ap[cls]
            if ap is None:
                assert got is None
            else:
                assert got == pytest.approx(ap, abs=1e-9), f"trial {trial} class {cls}"
        defined = [v for v in expected.values() if v is not None]
        if defined:
            assert report.map_all == pytest.approx(sum(defined) / len(defined), abs=1e-9)
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0, f"oracle sweep took {elapsed:.2f}s"


@criterion("perfect detector scores 1.0 and null detector 0.0 in all five columns")
def test_perfect_and_null_detector():
    manifest = make_manifest({
        "t0": {"size": (100, 100), "boxes": [("sup_cls", 0, 0, 60, 60),     # big
                                             ("uns_cls", 70, 70, 78, 78)]},  # small
        "t1": {"size": (400, 400), "boxes": [("uns_cls", 0, 0, 300, 300),   # big
                                             ("sup_cls", 390, 390, 398, 398)]},  # small
    })
    manifest.splits = {"test": ["t0", "t1"]}
    cfg = EvalConfig(supervised_classes=frozenset({"sup_cls"}))
    echo = [
        Detection(a.image_id, a.class_name, a.box, 1.0) for a in manifest.annotations
    ]
    perfect = evaluate(echo, manifest, cfg)
    for column in (perfect.map_all, perfect.map_supervised, perfect.map_unsupervised,
                   perfect.map_big, perfect.map_small):
        assert column == 1.0
    null = evaluate([], manifest, cfg)
    for column in (null.map_all, null.map_supervised, null.map_unsupervised,
                   null.map_big, null.map_small):
        assert column == 0.0


@criterion("IoU matches the pixel-rasterization oracle on 1,000 integer box pairs")
def test_iou_rasterization_oracle():
    gen = np.random.default_rng(2024)
    for _ in range(1000):
        ax, ay, bx, by = (int(v) for v in gen.integers(0, 50, size=4))
        aw, ah, bw, bh = (int(v) for v in gen.integers(1, 30, size=4))
        a = BoundingBox(ax, ay, ax + aw, ay + ah)
        b = BoundingBox(bx, by, bx + bw, by + bh)
        expected = rasterized_iou(
            (a.xmin, a.ymin, a.xmax, a.ymax), (b.xmin, b.ymin, b.xmax, b.ymax))
        assert iou(a, b) == pytest.approx(expected, abs=1e-9)


@criterion("500-image synthesis: every box tight, every outside pixel untouched")
def test_synthesis_tightness_500(tmp_path):
    gen = np.random.default_rng(3)
    design_px = np.zeros((12, 16, 4), dtype=np.uint8)
    design_px[:, :, :3] = gen.integers(0, 256, size=(12, 16, 3))
    design_px[:, :, 3] = 255
    design_px[0:2, 0:2, 3] = 0  # non-rectangular support exercises tightness
    from logokit.raster import RasterImage

    design = RasterImage(design_px)
    backgrounds = [(f"bg{i}", make_photo(96, 72, seed=100 + i)) for i in range(4)]
    records = synth_class(design, backgrounds, 500, seed=42,
                          ranges=TransformRanges(), out_dir=tmp_path,
                          class_name="acceptor")
    assert len(records) == 500
    bg_by_id = dict(backgrounds)
    manifest = manifest_from_records(
        records, {k: (v.width, v.height) for k, v in backgrounds})
    for rec in records:
        out = load_image(tmp_path / rec.image_path).pixels
        support = load_mask(tmp_path / rec.mask_path) > 0
        rows = np.flatnonzero(support.any(axis=1))
        cols = np.flatnonzero(support.any(axis=0))
        emitted = (rec.box.xmin, rec.box.ymin, rec.box.xmax, rec.box.ymax)
        assert emitted == (cols[0], rows[0], cols[-1] + 1, rows[-1] + 1)
        x0, y0, x1, y1 = (int(v) for v in emitted)
        outside = np.ones(support.shape, dtype=bool)
        outside[y0:y1, x0:x1] = False
        bg = bg_by_id[rec.background_id].pixels
        assert np.array_equal(out[outside], bg[outside])
        assert np.array_equal(out[~support & ~outside], bg[~support & ~outside])
    for ann in manifest.annotations:
        assert validate_annotation(ann, manifest.images[ann.image_id]) == []


@criterion("200 training pairs: outside-mask identity, inside-mask change")
def test_pair_invariant_200(tmp_path):
    from logokit.core import DatasetManifest, ImageRecord
    from logokit.pairgen import ForegroundMask

    non_logo = DatasetManifest()
    masked = DatasetManifest()
    regions = {}
    for i in range(5):
        img = make_photo(64, 56, seed=200 + i)
        path = tmp_path / "nl" / f"nl{i}.png"
        save_png(img, path)
        non_logo.images[f"nl{i}"] = ImageRecord(
            id=f"nl{i}", path=str(path), width=64, height=56, source="non-logo")
    for i in range(5):
        img = make_photo(60, 60, seed=300 + i)
        path = tmp_path / "mk" / f"mk{i}.png"
        save_png(img, path)
        masked.images[f"mk{i}"] = ImageRecord(
            id=f"mk{i}", path=str(path), width=60, height=60, source="masked")
        regions[f"mk{i}"] = ForegroundMask(
            polygon=((6.0 + i, 5.0), (40.0, 8.0 + i), (35.0, 42.0), (8.0, 38.0)))

    out = tmp_path / "pairs"
    records = build_pair_set(non_logo, masked, 100, seed=17, out_dir=out,
                             regions=regions)
    assert len(records) == 200
    for rec in records:
        clean = load_image(out / rec.clean_path).pixels
        corrupted = load_image(out / rec.corrupted_path).pixels
        mask = load_mask(out / rec.mask_path)
        region = mask > 0
        diff_outside = int(np.count_nonzero(clean[~region] != corrupted[~region]))
        diff_inside = int(np.count_nonzero(clean[region] != corrupted[region]))
        assert diff_outside == 0
        assert diff_inside > 0


@criterion("open split protocol: 200 designated train, 10% val, exhaustive; 32x40=1280")
def test_split_protocol():
    manifest, supervised, trainval = open_fixture(
        n_supervised=5, n_unsupervised=20, trainval_n=40, other_n=60, uns_n=100)
    out = split(manifest, SplitPlan.open(supervised, trainval, seed=1))
    assert len(out.splits["train"]) == 200
    train, val, test = (set(out.splits[k]) for k in ("train", "val", "test"))
    assert not train & val and not train & test and not val & test
    assert train | val | test == set(manifest.images)
    for cls in manifest.class_names():
        members = set(manifest.images_of_class(cls)) - train
        n_val = len(members & val)
        assert abs(n_val - 0.10 * len(members)) <= 1
    shape = open_fixture(n_supervised=32, n_unsupervised=1, trainval_n=40,
                         other_n=5, uns_n=11)
    wide = split(shape[0], SplitPlan.open(shape[1], shape[2], seed=1))
    assert len(wide.splits["train"]) == 1280


@criterion("pipelines are byte-identical across reruns and at workers 1 and 8")
def test_pipeline_determinism(tmp_path, monkeypatch):
    trees = {}
    for label, workers in (("w1", 1), ("w8", 8), ("w8_rerun", 8)):
        base = tmp_path / label
        base.mkdir()
        monkeypatch.chdir(base)
        registry = write_registry_fixture(base)
        make_background_dir(base)
        rc = main([
            "synth", "--registry", "registry.json", "--backgrounds", "bgs",
            "--out", "synth_out", "--classes", "2", "--per-class", "6",
            "--seed", "77", "--workers", str(workers),
        ])
        assert rc == 0

        nl_dir = base / "nl"
        mk_dir = base / "mk"
        for i in range(3):
            save_png(make_photo(64, 48, seed=400 + i), nl_dir / f"n{i}.png")
            save_png(make_photo(56, 56, seed=500 + i), mk_dir / f"m{i}.png")
        regions = base / "regions.jsonl"
        regions.write_text("\n".join(
            json.dumps({"image_id": f"m{i}",
                        "polygon": [[4, 4], [40, 6], [38, 40], [6, 36]]})
            for i in range(3)
        ) + "\n")
        rc = main([
            "pairs", "--non-logo", "nl", "--masked", "mk", "--regions",
            "regions.jsonl", "--out", "pairs_out", "-n", "5",
            "--seed", "78", "--workers", str(workers),
        ])
        assert rc == 0
        trees[label] = {
            "synth": tree_bytes(base / "synth_out"),
            "pairs": tree_bytes(base / "pairs_out"),
        }
    assert trees["w1"] == trees["w8"] == trees["w8_rerun"]


@criterion("default volume rule: 100 per class x 352 classes = 35,200 records")
def test_synthesis_volume_rule():
    from logokit.cli import DEFAULTS

    per_class = DEFAULTS["synth"]["per_class"]
    assert per_class == 100
    registry_classes = [f"brand{i:03d}" for i in range(352)]
    assert len(plan_jobs(registry_classes, per_class)) == 35_200
    assert per_class * len(registry_classes) == 35_200
