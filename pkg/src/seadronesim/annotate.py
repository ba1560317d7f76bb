"""Masks to COCO: tight boxes, run-length segmentations, dataset assembly, sidecars."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CocoValidationError
from .render import FrameMeta

DEFAULT_CATEGORY = "object"


@dataclass(frozen=True)
class BBox:
    """COCO xywh box: top-left pixel (x, y), width and height in pixels."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self) -> None:
        if self.w < 1 or self.h < 1:
            raise ValueError(f"box must be at least 1x1, got {self.w}x{self.h}")

    def to_list(self) -> list[int]:
        return [self.x, self.y, self.w, self.h]


def mask_to_bbox(mask: np.ndarray) -> BBox | None:
    """Tightest box over the true pixels; None for an empty mask."""
    m = np.asarray(mask, dtype=bool)
    rows = np.flatnonzero(m.any(axis=1))
    if rows.size == 0:
        return None
    cols = np.flatnonzero(m.any(axis=0))
    y0, y1 = int(rows[0]), int(rows[-1])
    x0, x1 = int(cols[0]), int(cols[-1])
    return BBox(x0, y0, x1 - x0 + 1, y1 - y0 + 1)


def mask_to_rle(mask: np.ndarray) -> dict:
    """COCO uncompressed RLE: column-major scan, counts starting with the zero run."""
    m = np.asarray(mask, dtype=bool)
    h, w = m.shape
    flat = m.flatten(order="F")
    n = flat.size
    if n == 0:
        return {"size": [h, w], "counts": [0]}
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], change, [n]))
    counts = np.diff(bounds).tolist()
    if flat[0]:
        counts = [0] + counts
    return {"size": [h, w], "counts": counts}


def rle_decode(rle: dict) -> np.ndarray:
    h, w = rle["size"]
    counts = rle["counts"]
    total = int(sum(counts))
    if total != h * w:
        raise CocoValidationError(f"RLE counts sum to {total}, expected {h * w}")
    flat = np.zeros(h * w, dtype=bool)
    pos = 0
    val = False
    for c in counts:
        if val:
            flat[pos:pos + c] = True
        pos += c
        val = not val
    return flat.reshape((h, w), order="F")


@dataclass(frozen=True)
class FrameRecord:
    """One rendered frame feeding COCO assembly."""

    file_name: str
    width: int
    height: int
    mask: np.ndarray


def build_coco(frames: list[FrameRecord], category_name: str = DEFAULT_CATEGORY) -> dict:
    """Assemble a COCO dataset dict: one image per frame, one annotation per
    nonempty mask (empty-mask frames stay as negative images), one category.

    Ids are sequential in input order, so identical input produces identical
    JSON bytes via ``coco_json_dumps``.
    """
    images = []
    annotations = []
    ann_id = 1
    for i, fr in enumerate(frames):
        mask = np.asarray(fr.mask, dtype=bool)
        if mask.shape != (fr.height, fr.width):
            raise ValueError(f"frame {fr.file_name}: mask shape {mask.shape} does not "
                             f"match image size {fr.height}x{fr.width}")
        image_id = i + 1
        images.append({
            "id": image_id,
            "file_name": fr.file_name,
            "width": fr.width,
            "height": fr.height,
        })
        box = mask_to_bbox(mask)
        if box is None:
            continue
        annotations.append({
            "id": ann_id,
            "image_id": image_id,
            "category_id": 1,
            "bbox": box.to_list(),
            "area": int(mask.sum()),
            "iscrowd": 0,
            "segmentation": mask_to_rle(mask),
        })
        ann_id += 1
    return {
        "images": images,
        "annotations": annotations,
        "categories": [{"id": 1, "name": category_name}],
    }


def coco_json_dumps(dataset: dict) -> str:
    """Canonical serialization (fixed key order, 2-space indent)."""
    return json.dumps(dataset, indent=2)


def validate_coco(dataset: dict) -> None:
    """Walk a COCO dataset dict and raise CocoValidationError on any defect:
    missing fields, bad types, duplicate ids, dangling references, boxes out
    of bounds, or annotation areas disagreeing with their decoded RLE."""

    def fail(msg: str) -> None:
        raise CocoValidationError(msg)

    for key in ("images", "annotations", "categories"):
        if key not in dataset or not isinstance(dataset[key], list):
            fail(f"dataset missing list field {key!r}")

    if len(dataset["categories"]) != 1:
        fail(f"expected exactly one category, got {len(dataset['categories'])}")
    cat = dataset["categories"][0]
    if not isinstance(cat.get("id"), int) or not isinstance(cat.get("name"), str):
        fail("category needs integer 'id' and string 'name'")

    images_by_id: dict[int, dict] = {}
    for i, im in enumerate(dataset["images"]):
        for f, t in (("id", int), ("file_name", str), ("width", int), ("height", int)):
            if not isinstance(im.get(f), t):
                fail(f"images[{i}] field {f!r} missing or not {t.__name__}")
        if im["width"] < 1 or im["height"] < 1:
            fail(f"images[{i}] has non-positive dimensions")
        if im["id"] in images_by_id:
            fail(f"duplicate image id {im['id']}")
        images_by_id[im["id"]] = im

    ann_ids = set()
    for i, an in enumerate(dataset["annotations"]):
        for f in ("id", "image_id", "category_id", "bbox", "area", "iscrowd",
                  "segmentation"):
            if f not in an:
                fail(f"annotations[{i}] missing field {f!r}")
        if an["id"] in ann_ids:
            fail(f"duplicate annotation id {an['id']}")
        ann_ids.add(an["id"])
        if an["image_id"] not in images_by_id:
            fail(f"annotations[{i}] references unknown image {an['image_id']}")
        if an["category_id"] != cat["id"]:
            fail(f"annotations[{i}] references unknown category {an['category_id']}")
        if an["iscrowd"] != 0:
            fail(f"annotations[{i}] iscrowd must be 0")
        bbox = an["bbox"]
        if len(bbox) != 4 or any(not isinstance(v, (int, float)) for v in bbox):
            fail(f"annotations[{i}] bbox must be 4 numbers")
        x, y, w, h = bbox
        im = images_by_id[an["image_id"]]
        if w < 1 or h < 1:
            fail(f"annotations[{i}] bbox smaller than one pixel")
        if x < 0 or y < 0 or x + w > im["width"] or y + h > im["height"]:
            fail(f"annotations[{i}] bbox exceeds image bounds")
        seg = an["segmentation"]
        if not isinstance(seg, dict) or "size" not in seg or "counts" not in seg:
            fail(f"annotations[{i}] segmentation must be an RLE dict")
        if list(seg["size"]) != [im["height"], im["width"]]:
            fail(f"annotations[{i}] RLE size does not match its image")
        decoded = rle_decode(seg)
        n_true = int(decoded.sum())
        if n_true != an["area"]:
            fail(f"annotations[{i}] area {an['area']} != decoded mask count {n_true}")


def write_meta_sidecar(meta: FrameMeta, path) -> Path:
    """One JSON sidecar per image; numeric fields round-trip losslessly."""
    path = Path(path)
    path.write_text(json.dumps(meta.to_dict(), indent=2) + "\n", encoding="utf-8")
    return path


def read_meta_sidecar(path) -> FrameMeta:
    with open(path, "r", encoding="utf-8") as fh:
        return FrameMeta.from_dict(json.load(fh))
