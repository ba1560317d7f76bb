"""COCO-style detection metrics for a single category.

Protocol, pinned for reproducibility:

* IoU thresholds 0.50:0.05:0.95 (10 values); AP is their mean.
* Per image, detections are ranked by descending score (ties broken by input
  order) and truncated to ``MAX_DETS``.
* Greedy matching per threshold: each detection takes the unmatched ground
  truth with the highest IoU >= threshold (ties to the lowest gt index); each
  gt matches at most once.
* Size strata by ground-truth area: small < 32^2, medium in [32^2, 96^2),
  large >= 96^2 (large is computed but left out of reports). Out-of-stratum
  gts are ignore regions: detections matching them are dropped from the
  ranked list rather than counted as false positives; in-stratum matches are
  always preferred over ignore matches.
* Precision/recall accumulate over the global ranking ordered by
  (-score, image id, detection index); AP is the mean of the precision
  envelope sampled at the 101 recalls 0.00, 0.01, ..., 1.00.
* A stratum with no ground truth reports -1.

Metric values are reported on the 0-100 scale.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CocoValidationError

IOU_THRESHOLDS = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))
RECALL_POINTS = tuple(round(0.01 * i, 2) for i in range(101))
MAX_DETS = 100
AREA_SMALL_MAX = 32 ** 2
AREA_MEDIUM_MAX = 96 ** 2
STRATA = {
    "all": (0.0, float("inf")),
    "small": (0.0, AREA_SMALL_MAX),
    "medium": (AREA_SMALL_MAX, AREA_MEDIUM_MAX),
    "large": (AREA_MEDIUM_MAX, float("inf")),
}


@dataclass(frozen=True)
class Detection:
    """One detector output: image, xywh box, and confidence in [0, 1]."""

    image_id: int
    bbox: tuple[float, float, float, float]
    score: float
    category_id: int = 1

    def __post_init__(self) -> None:
        x, y, w, h = self.bbox
        if w <= 0 or h <= 0:
            raise ValueError(f"detection bbox must have positive size, got {self.bbox}")
        if not np.isfinite(self.score):
            raise ValueError("detection score must be finite")


@dataclass
class ApReport:
    """The five headline numbers plus per-threshold PR curves (0-100 scale;
    -1 marks a stratum with no ground truth)."""

    ap: float
    ap50: float
    ap75: float
    ap_small: float
    ap_medium: float
    ap_large: float                      # computed, excluded from reports
    pr_curves: dict[float, list[float]] = field(default_factory=dict)
    num_images: int = 0
    num_gts: int = 0
    num_detections: int = 0

    def to_dict(self) -> dict:
        return {
            "AP": self.ap,
            "AP50": self.ap50,
            "AP75": self.ap75,
            "AP_s": self.ap_small,
            "AP_m": self.ap_medium,
            "recall_points": list(RECALL_POINTS),
            "pr_curves": {f"{t:.2f}": p for t, p in sorted(self.pr_curves.items())},
            "num_images": self.num_images,
            "num_gts": self.num_gts,
            "num_detections": self.num_detections,
        }

    def to_table(self) -> str:
        header = f"{'AP':>8} {'AP50':>8} {'AP75':>8} {'AP_s':>8} {'AP_m':>8}"
        row = " ".join(f"{v:8.2f}" for v in
                       (self.ap, self.ap50, self.ap75, self.ap_small, self.ap_medium))
        return header + "\n" + row


def iou(a, b) -> float:
    """Intersection over union of two xywh boxes."""
    ax, ay, aw, ah = (float(v) for v in (a.to_list() if hasattr(a, "to_list") else a))
    bx, by, bw, bh = (float(v) for v in (b.to_list() if hasattr(b, "to_list") else b))
    if aw <= 0 or ah <= 0 or bw <= 0 or bh <= 0:
        raise ValueError("iou of a degenerate box is undefined")
    ix = min(ax + aw, bx + bw) - max(ax, bx)
    iy = min(ay + ah, by + bh) - max(ay, by)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return min(max(inter / (aw * ah + bw * bh - inter), 0.0), 1.0)


def match_detections(dets, gts, iou_threshold: float,
                     gt_ignore=None) -> tuple[list[str], list[bool]]:
    """Greedy single-image matching.

    ``dets``: (bbox, score) pairs or Detections, already belonging to one
    image. Returns per-detection labels ("tp", "fp", or "ignore") and per-gt
    matched flags. Detections are processed in descending score with input
    order breaking ties; each takes the unmatched gt of highest IoU >=
    threshold, preferring evaluated gts over ignored ones.
    """
    boxes = [d.bbox if isinstance(d, Detection) else d[0] for d in dets]
    scores = [d.score if isinstance(d, Detection) else d[1] for d in dets]
    if gt_ignore is None:
        gt_ignore = [False] * len(gts)
    order = sorted(range(len(dets)), key=lambda i: (-scores[i], i))
    labels = ["fp"] * len(dets)
    matched = [False] * len(gts)
    for di in order:
        best_iou = -1.0
        best_g = -1
        best_ignored = False
        for prefer_ignored in (False, True):
            for g, gbox in enumerate(gts):
                if matched[g] or gt_ignore[g] != prefer_ignored:
                    continue
                v = iou(boxes[di], gbox)
                if v >= iou_threshold and v > best_iou:
                    best_iou = v
                    best_g = g
                    best_ignored = prefer_ignored
            if best_g >= 0:
                break
        if best_g >= 0:
            matched[best_g] = True
            labels[di] = "ignore" if best_ignored else "tp"
    return labels, matched


def average_precision(labels: list[bool], num_gt: int) -> float:
    """101-point interpolated AP from a ranked TP/FP list.

    ``labels`` are true-positive flags ordered by descending score. Returns a
    value in [0, 1], or -1.0 when there is no ground truth.
    """
    if num_gt == 0:
        return -1.0
    if not labels:
        return 0.0
    tp = np.cumsum([1.0 if is_tp else 0.0 for is_tp in labels])
    fp = np.cumsum([0.0 if is_tp else 1.0 for is_tp in labels])
    recall = tp / num_gt
    precision = tp / np.maximum(tp + fp, 1e-12)
    # precision envelope: running max from the high-recall end down
    for i in range(len(precision) - 1, 0, -1):
        precision[i - 1] = max(precision[i - 1], precision[i])
    idx = np.searchsorted(recall, RECALL_POINTS, side="left")
    sampled = np.where(idx < len(precision), precision[np.minimum(idx, len(precision) - 1)], 0.0)
    return float(sampled.mean())


def _gt_tables(gt: dict) -> tuple[dict[int, list], list[int]]:
    """Per-image gt list [(bbox, area), ...] keyed by image id, plus id order."""
    per_image: dict[int, list] = {im["id"]: [] for im in gt["images"]}
    for an in gt["annotations"]:
        per_image[an["image_id"]].append((tuple(float(v) for v in an["bbox"]),
                                          float(an["area"])))
    return per_image, sorted(per_image)


def _rank_key(entry):
    score, image_id, det_index, _ = entry
    return (-score, image_id, det_index)


def evaluate(gt: dict, predictions: list[Detection]) -> ApReport:
    """Score predictions against a COCO ground-truth dict."""
    validate_coco_gt(gt)
    per_image, image_ids = _gt_tables(gt)
    id_set = set(image_ids)
    for i, det in enumerate(predictions):
        if det.image_id not in id_set:
            raise CocoValidationError(
                f"prediction {i} references unknown image id {det.image_id}")

    # per-image ranked, truncated detections: (bbox, score, input index)
    dets_by_image: dict[int, list] = {i: [] for i in image_ids}
    for idx, det in enumerate(predictions):
        dets_by_image[det.image_id].append((det.bbox, det.score, idx))
    for img in image_ids:
        dets_by_image[img].sort(key=lambda d: (-d[1], d[2]))
        dets_by_image[img] = dets_by_image[img][:MAX_DETS]

    ap_by_stratum: dict[str, dict[float, float]] = {}
    pr_curves: dict[float, list[float]] = {}
    for stratum, (lo, hi) in STRATA.items():
        per_thr: dict[float, float] = {}
        num_gt = sum(1 for img in image_ids for (_, area) in per_image[img]
                     if lo <= area < hi)
        for thr in IOU_THRESHOLDS:
            ranked = []  # (score, image_id, det_index, is_tp)
            for img in image_ids:
                gts = [g for (g, _a) in per_image[img]]
                ignore = [not (lo <= a < hi) for (_g, a) in per_image[img]]
                dets = [(b, s) for (b, s, _i) in dets_by_image[img]]
                labels, _ = match_detections(dets, gts, thr, gt_ignore=ignore)
                for (b, s, di), lab in zip(dets_by_image[img], labels):
                    if lab == "ignore":
                        continue
                    ranked.append((s, img, di, lab == "tp"))
            ranked.sort(key=_rank_key)
            ap = average_precision([r[3] for r in ranked], num_gt)
            per_thr[thr] = ap
            if stratum == "all":
                pr_curves[thr] = _pr_curve([r[3] for r in ranked], num_gt)
        ap_by_stratum[stratum] = per_thr

    def mean_ap(stratum: str) -> float:
        vals = list(ap_by_stratum[stratum].values())
        if any(v < 0 for v in vals):
            return -1.0
        return 100.0 * float(np.mean(vals))

    def at(stratum: str, thr: float) -> float:
        v = ap_by_stratum[stratum][thr]
        return -1.0 if v < 0 else 100.0 * v

    return ApReport(
        ap=mean_ap("all"), ap50=at("all", 0.5), ap75=at("all", 0.75),
        ap_small=mean_ap("small"), ap_medium=mean_ap("medium"),
        ap_large=mean_ap("large"), pr_curves=pr_curves,
        num_images=len(image_ids),
        num_gts=len(gt["annotations"]),
        num_detections=len(predictions),
    )


def _pr_curve(labels: list[bool], num_gt: int) -> list[float]:
    """Envelope precision at the 101 recall points (zeros when no gt)."""
    if num_gt == 0 or not labels:
        return [0.0] * len(RECALL_POINTS)
    tp = np.cumsum([1.0 if is_tp else 0.0 for is_tp in labels])
    fp = np.cumsum([0.0 if is_tp else 1.0 for is_tp in labels])
    recall = tp / num_gt
    precision = tp / np.maximum(tp + fp, 1e-12)
    for i in range(len(precision) - 1, 0, -1):
        precision[i - 1] = max(precision[i - 1], precision[i])
    idx = np.searchsorted(recall, RECALL_POINTS, side="left")
    return [float(precision[i]) if i < len(precision) else 0.0 for i in idx]


# ---------------------------------------------------------------------------
# I/O and input validation

def validate_coco_gt(gt: dict) -> None:
    """Structural checks for a ground-truth dict used by evaluate()."""
    for key in ("images", "annotations", "categories"):
        if key not in gt or not isinstance(gt[key], list):
            raise CocoValidationError(f"ground truth missing list field {key!r}")
    ids = [im.get("id") for im in gt["images"]]
    if len(set(ids)) != len(ids):
        raise CocoValidationError("duplicate image ids in ground truth")
    id_set = set(ids)
    for i, an in enumerate(gt["annotations"]):
        for f in ("image_id", "bbox", "area"):
            if f not in an:
                raise CocoValidationError(f"annotations[{i}] missing field {f!r}")
        if an["image_id"] not in id_set:
            raise CocoValidationError(
                f"annotations[{i}] references unknown image {an['image_id']}")
        x, y, w, h = an["bbox"]
        if w <= 0 or h <= 0:
            raise CocoValidationError(f"annotations[{i}] bbox has non-positive size")


def load_detections(source) -> list[Detection]:
    """Read a COCO results JSON (list of {image_id, category_id, bbox, score}).

    Raises CocoValidationError naming the offending record index.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    else:
        data = source
    if not isinstance(data, list):
        raise CocoValidationError("results file must contain a JSON list")
    out = []
    for i, rec in enumerate(data):
        if not isinstance(rec, dict):
            raise CocoValidationError(f"results[{i}] is not an object")
        for f in ("image_id", "category_id", "bbox", "score"):
            if f not in rec:
                raise CocoValidationError(f"results[{i}] missing field {f!r}")
        bbox = rec["bbox"]
        if not isinstance(bbox, (list, tuple)) or len(bbox) != 4:
            raise CocoValidationError(f"results[{i}] bbox must be [x, y, w, h]")
        score = rec["score"]
        if not isinstance(score, (int, float)) or not 0.0 <= float(score) <= 1.0:
            raise CocoValidationError(f"results[{i}] score must lie in [0, 1]")
        if not all(isinstance(v, (int, float)) for v in bbox):
            raise CocoValidationError(f"results[{i}] bbox entries must be numbers")
        if bbox[2] <= 0 or bbox[3] <= 0:
            raise CocoValidationError(f"results[{i}] bbox has non-positive size")
        try:
            out.append(Detection(image_id=int(rec["image_id"]),
                                 bbox=tuple(float(v) for v in bbox),
                                 score=float(score),
                                 category_id=int(rec["category_id"])))
        except ValueError as e:
            raise CocoValidationError(f"results[{i}]: {e}") from None
    return out


def write_report(report: ApReport, path) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
