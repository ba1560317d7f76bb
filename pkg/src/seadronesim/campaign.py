"""Dataset-generation campaigns: sweep grids, deterministic pose sampling,
train/val splits, resizing with annotation rescale, and tree output."""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
from PIL import Image

from . import annotate
from .errors import ConfigError, RenderError
from .geometry import TriangleMesh, builtin_mesh, make_box, make_cone, quat_from_yaw_pitch_roll
from .render import RenderSettings, render_frame, write_png
from .scene import MeshInstance, SceneSpec, assemble_scene, place_camera, water_preset

log = logging.getLogger(__name__)

DEFAULT_ALTITUDES = (10.0, 20.0, 30.0, 40.0, 50.0)
DEFAULT_COLORS = ("brown", "blue", "green")
POSE_TILT_MAX_DEG = 10.0  # per-frame roll/pitch jitter


@dataclass(frozen=True)
class MixSpec:
    """Extra frames drawn from one cell, appended to the base grid pre-split."""

    altitude_m: float
    color: str
    turbidity: str
    count: int

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ConfigError(f"mix count must be >= 1, got {self.count}")


@dataclass
class CampaignSpec:
    """Declarative sweep over altitude x water color x turbidity."""

    altitudes_m: tuple = DEFAULT_ALTITUDES
    colors: tuple = DEFAULT_COLORS
    turbidities: tuple = ("low",)
    frames_per_cell: int = 626
    orbit_angles: dict = field(default_factory=lambda: {"mode": "random"})
    orbit_radius_m: float = 5.0
    output_size: int = 416
    native_size: int = 832
    split_ratio: float = 0.8
    seed: int = 0
    mixes: tuple = ()
    object_mesh: dict = field(default_factory=lambda: {"builtin": "rov"})
    category_name: str = annotate.DEFAULT_CATEGORY
    distractor_count: int = 0
    camera_fov_deg: float = 60.0
    water_depth_m: float = 3.0
    wave_amplitude: float = 0.02
    keep_empty_frames: bool = True
    spp: int = 64
    max_bounces: int = 6
    exposure: float = 1.0

    def __post_init__(self) -> None:
        self.altitudes_m = tuple(float(a) for a in self.altitudes_m)
        self.colors = tuple(self.colors)
        self.turbidities = tuple(self.turbidities)
        self.mixes = tuple(m if isinstance(m, MixSpec) else MixSpec(**m) for m in self.mixes)
        if not self.altitudes_m or not self.colors or not self.turbidities:
            raise ConfigError("altitudes_m, colors, and turbidities must be non-empty")
        if self.frames_per_cell < 1:
            raise ConfigError(f"frames_per_cell must be >= 1, got {self.frames_per_cell}")
        if not 0 < self.split_ratio < 1:
            raise ConfigError(f"split_ratio must lie in (0, 1), got {self.split_ratio}")
        if self.output_size < 32:
            raise ConfigError(f"output_size must be >= 32, got {self.output_size}")
        if self.native_size < self.output_size:
            raise ConfigError("native_size must be >= output_size")
        mode = self.orbit_angles.get("mode")
        if mode not in ("random", "uniform", "list"):
            raise ConfigError(f"orbit_angles.mode must be random|uniform|list, got {mode!r}")
        if mode == "uniform" and int(self.orbit_angles.get("count", 0)) < 1:
            raise ConfigError("orbit_angles.count must be >= 1 for uniform mode")
        if mode == "list" and not self.orbit_angles.get("values"):
            raise ConfigError("orbit_angles.values must be non-empty for list mode")

    def cells(self) -> list[tuple[float, str, str]]:
        return [(a, c, t) for a in self.altitudes_m
                for c in self.colors for t in self.turbidities]


@dataclass(frozen=True)
class RenderJob:
    """One planned frame: cell parameters plus the deterministic pose draw."""

    job_id: int
    altitude_m: float
    color: str
    turbidity: str
    frame_in_cell: int
    orbit_angle: float
    object_yaw: float
    object_pitch: float
    object_roll: float
    frame_seed: int
    source: str  # "grid" or "mix<i>"

    def provenance(self) -> dict:
        return {
            "job_id": self.job_id,
            "altitude_m": self.altitude_m,
            "color": self.color,
            "turbidity": self.turbidity,
            "frame_in_cell": self.frame_in_cell,
            "orbit_angle": self.orbit_angle,
            "object_yaw": self.object_yaw,
            "object_pitch": self.object_pitch,
            "object_roll": self.object_roll,
            "frame_seed": self.frame_seed,
            "source": self.source,
        }


def _job_rng(seed: int, cell_index: int, frame_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence((seed, cell_index, frame_index))))


def _orbit_angle(spec: CampaignSpec, frame: int, rng: np.random.Generator) -> float:
    mode = spec.orbit_angles["mode"]
    if mode == "uniform":
        k = int(spec.orbit_angles["count"])
        return 2 * math.pi * (frame % k) / k
    if mode == "list":
        values = spec.orbit_angles["values"]
        return float(values[frame % len(values)])
    return float(rng.uniform(0.0, 2 * math.pi))


def plan_campaign(spec: CampaignSpec) -> list[RenderJob]:
    """Expand the sweep into an ordered job list.

    Poses and orbit angles are pure functions of (spec, seed): each frame's
    draws come from a generator keyed by (seed, cell index, frame index), so
    replanning always reproduces the same jobs.
    """
    jobs: list[RenderJob] = []
    cells = spec.cells()
    tilt = math.radians(POSE_TILT_MAX_DEG)

    def draw(cell_idx: int, frame: int, alt: float, color: str, turb: str,
             source: str) -> RenderJob:
        rng = _job_rng(spec.seed, cell_idx, frame)
        yaw = float(rng.uniform(0.0, 2 * math.pi))
        pitch = float(rng.uniform(-tilt, tilt))
        roll = float(rng.uniform(-tilt, tilt))
        orbit = _orbit_angle(spec, frame, rng)
        frame_seed = int(rng.integers(0, 2 ** 63, dtype=np.int64))
        return RenderJob(job_id=len(jobs), altitude_m=alt, color=color, turbidity=turb,
                         frame_in_cell=frame, orbit_angle=orbit, object_yaw=yaw,
                         object_pitch=pitch, object_roll=roll, frame_seed=frame_seed,
                         source=source)

    for ci, (alt, color, turb) in enumerate(cells):
        for f in range(spec.frames_per_cell):
            jobs.append(draw(ci, f, alt, color, turb, "grid"))
    for mi, mix in enumerate(spec.mixes):
        for f in range(mix.count):
            jobs.append(draw(len(cells) + mi, f, mix.altitude_m, mix.color,
                             mix.turbidity, f"mix{mi}"))
    return jobs


def split_dataset(n_items: int, ratio: float, seed: int) -> tuple[list[int], list[int]]:
    """Deterministic shuffled split; train count = round-half-up(ratio * N)."""
    if n_items < 2:
        raise ValueError(f"need at least 2 items to split, got {n_items}")
    if not 0 < ratio < 1:
        raise ValueError(f"split ratio must lie in (0, 1), got {ratio}")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, 0x5917))))
    perm = rng.permutation(n_items)
    n_train = int(math.floor(ratio * n_items + 0.5))
    train = sorted(int(i) for i in perm[:n_train])
    val = sorted(int(i) for i in perm[n_train:])
    return train, val


def resize_with_annotations(image: np.ndarray, mask: np.ndarray,
                            bbox: annotate.BBox | None, target: int
                            ) -> tuple[np.ndarray, np.ndarray, annotate.BBox | None]:
    """Resize to target x target: image by area averaging, mask by nearest
    neighbor re-binarized, and the box recomputed from the resized mask so
    mask/bbox consistency survives the rescale. The incoming bbox is only a
    consistency hint; the output box never comes from scaling it numerically.
    """
    if target < 1:
        raise ValueError(f"target size must be >= 1, got {target}")
    img = np.asarray(image)
    m = np.asarray(mask, dtype=bool)
    if img.shape[:2] != m.shape:
        raise ValueError(f"image {img.shape[:2]} and mask {m.shape} sizes differ")
    resized_img = np.asarray(
        Image.fromarray(img).resize((target, target), Image.Resampling.BOX))
    h, w = m.shape
    rows = np.minimum((np.floor((np.arange(target) + 0.5) * h / target)).astype(int), h - 1)
    cols = np.minimum((np.floor((np.arange(target) + 0.5) * w / target)).astype(int), w - 1)
    resized_mask = m[np.ix_(rows, cols)]
    return resized_img, resized_mask, annotate.mask_to_bbox(resized_mask)


@dataclass
class DatasetManifest:
    """Provenance for one generated dataset: split membership plus per-image
    cell parameters, reproducible from (spec, seed)."""

    seed: int
    train: list[str]
    val: list[str]
    records: list[dict]

    def to_dict(self) -> dict:
        return {"seed": self.seed, "train": self.train, "val": self.val,
                "records": self.records}


_INCOMPLETE_SENTINEL = "_INCOMPLETE"


def _load_object_mesh(mesh_spec: dict, base_dir: Path | None) -> TriangleMesh:
    from .configio import resolve_mesh
    return resolve_mesh(mesh_spec, base_dir)


def _distractors_for_job(spec: CampaignSpec, job: RenderJob) -> list[MeshInstance]:
    """Seafloor boxes/cones plus above-water hills on a ring away from the object."""
    if spec.distractor_count < 1:
        return []
    rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence((spec.seed, 0xD157, job.job_id))))
    out = []
    for k in range(spec.distractor_count):
        ang = rng.uniform(0, 2 * math.pi)
        rad = rng.uniform(3.0, 8.0)
        x, y = rad * math.cos(ang), rad * math.sin(ang)
        kind = k % 3
        if kind == 0:
            size = rng.uniform(0.3, 1.0)
            mesh = make_box((size, size, size * 0.6))
            z = -spec.water_depth_m + size * 0.3
        elif kind == 1:
            mesh = make_cone(radius=rng.uniform(0.3, 0.8), height=rng.uniform(0.3, 1.0),
                             segments=12)
            z = -spec.water_depth_m
        else:
            mesh = make_cone(radius=rng.uniform(0.8, 2.0), height=rng.uniform(0.5, 1.5),
                             segments=12)
            z = 0.0  # hill poking above the waterline
        out.append(MeshInstance(mesh, translation=np.array([x, y, z])))
    return out


def _scene_for_job(spec: CampaignSpec, job: RenderJob, mesh: TriangleMesh,
                   size: int) -> SceneSpec:
    medium, tint = water_preset(job.color, job.turbidity, depth=spec.water_depth_m)
    camera = place_camera(job.altitude_m, job.orbit_angle, (0.0, 0.0, 0.0),
                          math.radians(spec.camera_fov_deg), size, size,
                          orbit_radius=spec.orbit_radius_m)
    rot = quat_from_yaw_pitch_roll(job.object_yaw, job.object_pitch, job.object_roll)
    return SceneSpec(
        object_instance=MeshInstance(mesh, rotation_wxyz=rot),
        camera=camera, water=medium, water_tint=np.asarray(tint),
        surface_wave_amplitude=spec.wave_amplitude,
        distractors=_distractors_for_job(spec, job),
        seed=job.frame_seed,
    )


def run_campaign(spec: CampaignSpec, out_dir, workers: int = 1,
                 base_dir: Path | None = None) -> DatasetManifest:
    """Render every planned job into a dataset tree:

        out/
          images/frame_NNNNNN.png
          masks/frame_NNNNNN.png
          meta/frame_NNNNNN.meta.json
          annotations/{train,val}.json
          manifest.json

    The run is reproducible: identical (spec, seed) yields byte-identical
    manifest and annotation files for any worker count. A partially written
    tree carries an _INCOMPLETE sentinel until the manifest lands.
    """
    out = Path(out_dir)
    for sub in ("images", "masks", "meta", "annotations"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    sentinel = out / _INCOMPLETE_SENTINEL
    sentinel.write_text("campaign in progress\n", encoding="utf-8")

    jobs = plan_campaign(spec)
    mesh = _load_object_mesh(spec.object_mesh, base_dir)
    settings_base = dict(samples_per_pixel=spec.spp, max_bounces=spec.max_bounces,
                         exposure=spec.exposure)

    def run_job(job: RenderJob):
        scene_spec = _scene_for_job(spec, job, mesh, spec.native_size)
        scene = assemble_scene(scene_spec)
        settings = RenderSettings(seed=job.frame_seed & (2 ** 64 - 1), **settings_base)
        try:
            frame = render_frame(scene, settings, frame_index=job.job_id)
        except RenderError as e:
            raise RenderError(f"job {job.job_id}: {e}") from e
        name = f"frame_{job.job_id:06d}"
        img, mask, _ = resize_with_annotations(frame.rgb8, frame.mask, None,
                                               spec.output_size)
        write_png(out / "images" / f"{name}.png", img)
        write_png(out / "masks" / f"{name}.png", mask)
        annotate.write_meta_sidecar(frame.meta, out / "meta" / f"{name}.meta.json")
        return annotate.FrameRecord(file_name=f"{name}.png", width=spec.output_size,
                                    height=spec.output_size, mask=mask)

    records: list[annotate.FrameRecord | None] = [None] * len(jobs)
    if workers <= 1:
        for i, job in enumerate(jobs):
            records[i] = run_job(job)
            if (i + 1) % 25 == 0 or i + 1 == len(jobs):
                log.info("rendered %d/%d frames", i + 1, len(jobs))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(run_job, job): i for i, job in enumerate(jobs)}
            done = 0
            for fut, i in futures.items():
                records[i] = fut.result()
                done += 1
                if done % 25 == 0 or done == len(jobs):
                    log.info("rendered %d/%d frames", done, len(jobs))

    frames = [r for r in records if r is not None]
    if not spec.keep_empty_frames:
        frames = [f for f in frames if f.mask.any()]
    train_idx, val_idx = split_dataset(len(frames), spec.split_ratio, spec.seed)
    train_frames = [frames[i] for i in train_idx]
    val_frames = [frames[i] for i in val_idx]

    for name, part in (("train", train_frames), ("val", val_frames)):
        coco = annotate.build_coco(part, category_name=spec.category_name)
        (out / "annotations" / f"{name}.json").write_text(
            annotate.coco_json_dumps(coco) + "\n", encoding="utf-8")

    split_of = {frames[i].file_name: "train" for i in train_idx}
    split_of.update({frames[i].file_name: "val" for i in val_idx})
    prov = []
    for job, rec in zip(jobs, records):
        p = job.provenance()
        p["file_name"] = rec.file_name
        p["split"] = split_of.get(rec.file_name, "dropped")
        prov.append(p)
    manifest = DatasetManifest(
        seed=spec.seed,
        train=[f.file_name for f in train_frames],
        val=[f.file_name for f in val_frames],
        records=prov,
    )
    (out / "manifest.json").write_text(
        json.dumps(manifest.to_dict(), indent=2) + "\n", encoding="utf-8")
    sentinel.unlink()
    return manifest
