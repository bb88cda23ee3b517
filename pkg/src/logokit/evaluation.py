"""Detection evaluation: greedy IoU matching, per-class AP, mAP, and the
supervised/unsupervised and big/small subgroup breakdowns.

Per-class evaluation is independent and order-free: inputs are sorted
canonically before matching, so permuting input records never changes the
report.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .core import Annotation, BoundingBox, DatasetManifest, Detection, iou, scale_ratio

__all__ = [
    "EvalConfig",
    "ClassCounts",
    "EvalReport",
    "sort_detections",
    "match_detections",
    "average_precision",
    "evaluate",
    "read_detections",
    "render_report",
]

TP = "tp"
FP = "fp"
IGNORE = "ignore"


@dataclass(frozen=True)
class EvalConfig:
    """Evaluation protocol knobs.

    scale_threshold is an area ratio (box area / image area); instances at or
    above it count as big logos, below as small.
    """

    iou_threshold: float = 0.5
    interpolation: str = "all-points"  # or "11-point"
    scale_threshold: float = 0.02
    supervised_classes: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if not 0 < self.iou_threshold < 1:
            raise ValueError(f"IoU threshold must be in (0, 1), got {self.iou_threshold}")
        if not 0 < self.scale_threshold < 1:
            raise ValueError(f"scale threshold must be in (0, 1), got {self.scale_threshold}")
        if self.interpolation not in ("all-points", "11-point"):
            raise ValueError(f"unknown interpolation {self.interpolation!r}")


@dataclass
class ClassCounts:
    n_gt: int = 0
    n_det: int = 0
    tp: int = 0
    fp: int = 0


@dataclass
class EvalReport:
    """Per-class AP plus the five mAP columns of the benchmark protocol."""

    per_class_ap: dict[str, float | None] = field(default_factory=dict)
    map_all: float | None = None
    map_supervised: float | None = None
    map_unsupervised: float | None = None
    map_big: float | None = None
    map_small: float | None = None
    counts: dict[str, ClassCounts] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)


def sort_detections(dets: list[Detection]) -> list[Detection]:
    """Canonical evaluation order: confidence descending, ties by image id
    then box coordinates."""
    return sorted(dets, key=lambda d: (-d.score, d.image_id, d.box))


def _match(
    dets: list[Detection],
    gts: list[Annotation],
    ignored: list[bool],
    threshold: float,
) -> list[str]:
    """Greedy single-claim matching; flags align with sort_detections(dets).

    Each detection takes the unclaimed scored GT on its image with the
    highest IoU; a detection whose only qualifying overlap is with an
    ignored GT is dropped from scoring entirely.
    """
    by_image: dict[str, list[int]] = {}
    order = sorted(range(len(gts)), key=lambda i: (gts[i].image_id, gts[i].box))
    for i in order:
        by_image.setdefault(gts[i].image_id, []).append(i)
    claimed = [False] * len(gts)

    flags = []
    for det in sort_detections(dets):
        candidates = by_image.get(det.image_id, [])
        best, best_iou = -1, 0.0
        for i in candidates:
            if ignored[i] or claimed[i]:
                continue
            overlap = iou(det.box, gts[i].box)
            if overlap > best_iou:
                best, best_iou = i, overlap
        if best >= 0 and best_iou >= threshold:
            claimed[best] = True
            flags.append(TP)
            continue
        hits_ignored = any(
            ignored[i] and iou(det.box, gts[i].box) >= threshold for i in candidates
        )
        flags.append(IGNORE if hits_ignored else FP)
    return flags


def match_detections(
    dets: list[Detection], gts: list[Annotation], cfg: EvalConfig = EvalConfig()
) -> list[bool]:
    """TP/FP flags for one class, aligned with sort_detections(dets)."""
    flags = _match(dets, gts, [False] * len(gts), cfg.iou_threshold)
    return [f == TP for f in flags]


def average_precision(
    flags: list[bool], n_gt: int, interpolation: str = "all-points"
) -> float | None:
    """Area under the precision/recall curve built from ordered TP/FP flags.

    Recall uses n_gt as its denominator.  n_gt == 0 leaves AP undefined
    (None); such classes are excluded from every mean.
    """
    if n_gt < 0:
        raise ValueError("n_gt must be >= 0")
    if n_gt == 0:
        return None
    if not flags:
        return 0.0
    recalls, precisions = [], []
    tp = fp = 0
    for is_tp in flags:
        if is_tp:
            tp += 1
        else:
            fp += 1
        recalls.append(tp / n_gt)
        precisions.append(tp / (tp + fp))

    if interpolation == "11-point":
        total = 0.0
        for i in range(11):
            level = i / 10.0
            best = max((p for r, p in zip(recalls, precisions) if r >= level), default=0.0)
            total += best
        return total / 11.0

    mrec = [0.0] + recalls + [1.0]
    mpre = [0.0] + precisions + [0.0]
    for i in range(len(mpre) - 2, -1, -1):
        mpre[i] = max(mpre[i], mpre[i + 1])
    ap = 0.0
    for i in range(len(mrec) - 1):
        ap += (mrec[i + 1] - mrec[i]) * mpre[i + 1]
    return ap


def _mean(values: list[float]) -> float | None:
    return sum(values) / len(values) if values else None


def _subgroup_ap(
    dets: list[Detection],
    gts: list[Annotation],
    in_group: list[bool],
    cfg: EvalConfig,
) -> float | None:
    """AP against the subgroup's GTs; out-of-group GTs are IGNORE: detections
    overlapping them are neither TP nor FP, and they don't add to recall."""
    n_gt = sum(in_group)
    if n_gt == 0:
        return None
    flags = _match(dets, gts, [not g for g in in_group], cfg.iou_threshold)
    scored = [f == TP for f in flags if f != IGNORE]
    return average_precision(scored, n_gt, cfg.interpolation)


def evaluate(
    dets: list[Detection],
    manifest: DatasetManifest,
    cfg: EvalConfig = EvalConfig(),
) -> EvalReport:
    """Full protocol evaluation over the manifest's test split.

    Detections on images outside the test split are dropped with a warning;
    detections naming classes absent from the ground truth are reported and
    excluded.  Manifests without a test split are evaluated whole.
    """
    report = EvalReport()
    if "test" in manifest.splits:
        eval_ids = set(manifest.splits["test"])
    else:
        eval_ids = set(manifest.images)
        report.warnings.append("manifest has no test split; evaluating all images")

    gts = [a for a in manifest.annotations if a.image_id in eval_ids]
    classes = sorted({a.class_name for a in gts})
    class_set = set(classes)

    outside = [d for d in dets if d.image_id not in eval_ids]
    if outside:
        report.warnings.append(
            f"dropped {len(outside)} detections on images outside the test split"
        )
    unknown = sorted({d.class_name for d in dets if d.class_name not in class_set})
    if unknown:
        report.warnings.append(
            f"excluded detections of classes with no ground truth: {unknown}"
        )
    dets = [d for d in dets if d.image_id in eval_ids and d.class_name in class_set]

    # big/small membership per GT: area ratio against the owning image
    def is_big(ann: Annotation) -> bool:
        img = manifest.images[ann.image_id]
        return scale_ratio(ann, img) / 100.0 >= cfg.scale_threshold

    ap_all: list[float] = []
    ap_sup: list[float] = []
    ap_uns: list[float] = []
    ap_big: list[float] = []
    ap_small: list[float] = []
    for cls in classes:
        cls_dets = [d for d in dets if d.class_name == cls]
        cls_gts = [g for g in gts if g.class_name == cls]
        flags = match_detections(cls_dets, cls_gts, cfg)
        ap = average_precision(flags, len(cls_gts), cfg.interpolation)
        report.per_class_ap[cls] = ap
        report.counts[cls] = ClassCounts(
            n_gt=len(cls_gts),
            n_det=len(cls_dets),
            tp=sum(flags),
            fp=len(flags) - sum(flags),
        )
        if ap is None:
            continue
        ap_all.append(ap)
        (ap_sup if cls in cfg.supervised_classes else ap_uns).append(ap)

        big_flags = [is_big(g) for g in cls_gts]
        big_ap = _subgroup_ap(cls_dets, cls_gts, big_flags, cfg)
        if big_ap is not None:
            ap_big.append(big_ap)
        small_ap = _subgroup_ap(cls_dets, cls_gts, [not b for b in big_flags], cfg)
        if small_ap is not None:
            ap_small.append(small_ap)

    report.map_all = _mean(ap_all)
    report.map_supervised = _mean(ap_sup)
    report.map_unsupervised = _mean(ap_uns)
    report.map_big = _mean(ap_big)
    report.map_small = _mean(ap_small)
    return report


# --------------------------------------------------------------------------
# Detections file I/O and report rendering.
# --------------------------------------------------------------------------

def read_detections(path: str | Path) -> list[Detection]:
    """Read detections from JSONL ({image_id, class, score, xmin, ymin, xmax,
    ymax}) or whitespace-delimited text in the same field order."""
    dets = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        try:
            if line.startswith("{"):
                row = json.loads(line)
                dets.append(Detection(
                    image_id=str(row["image_id"]),
                    class_name=str(row["class"]),
                    score=float(row["score"]),
                    box=BoundingBox(
                        float(row["xmin"]), float(row["ymin"]),
                        float(row["xmax"]), float(row["ymax"]),
                    ),
                ))
            else:
                parts = line.split()
                if len(parts) != 7:
                    raise ValueError(f"expected 7 fields, got {len(parts)}")
                dets.append(Detection(
                    image_id=parts[0],
                    class_name=parts[1],
                    score=float(parts[2]),
                    box=BoundingBox(*(float(v) for v in parts[3:7])),
                ))
        except (KeyError, ValueError) as exc:
            raise ValueError(f"{path}, line {lineno}: {exc}") from exc
    return dets


def _pct(value: float | None) -> str:
    return "-" if value is None else f"{100.0 * value:.2f}"


def render_report(report: EvalReport, per_class: bool = False) -> str:
    """Text table with the five protocol columns, mAP as percentages."""
    headers = ["All Class", "Uns Class", "Sup Class", "Big Logo", "Small Logo"]
    values = [
        _pct(report.map_all),
        _pct(report.map_unsupervised),
        _pct(report.map_supervised),
        _pct(report.map_big),
        _pct(report.map_small),
    ]
    widths = [max(len(h), len(v)) for h, v in zip(headers, values)]
    lines = [
        "  ".join(h.rjust(w) for h, w in zip(headers, widths)),
        "  ".join(v.rjust(w) for v, w in zip(values, widths)),
    ]
    if per_class:
        lines.append("")
        for cls in sorted(report.per_class_ap):
            c = report.counts[cls]
            lines.append(
                f"{cls}: AP={_pct(report.per_class_ap[cls])} "
                f"gt={c.n_gt} det={c.n_det} tp={c.tp} fp={c.fp}"
            )
    return "\n".join(lines)


def report_to_json(report: EvalReport) -> dict:
    return {
        "per_class_ap": report.per_class_ap,
        "map": {
            "all": report.map_all,
            "supervised": report.map_supervised,
            "unsupervised": report.map_unsupervised,
            "big": report.map_big,
            "small": report.map_small,
        },
        "counts": {
            cls: {"n_gt": c.n_gt, "n_det": c.n_det, "tp": c.tp, "fp": c.fp}
            for cls, c in report.counts.items()
        },
        "warnings": report.warnings,
    }
