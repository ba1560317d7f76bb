"""Frame rendering: deterministic tile-parallel path tracing and the object-id pass."""

from __future__ import annotations

import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from . import kernels
from .errors import RenderError
from .scene import OBJECT_INSTANCE_ID, CameraRig, Scene, WaterMedium

TILE = 32


@dataclass(frozen=True)
class RenderSettings:
    """Per-frame sampling controls.

    ``max_bounces`` counts scattering events (diffuse surfaces and in-water
    scattering); specular water-surface events are free but internally capped.
    """

    samples_per_pixel: int = 64
    max_bounces: int = 6
    seed: int = 0
    exposure: float = 1.0

    def __post_init__(self) -> None:
        if self.samples_per_pixel < 1:
            raise ValueError(f"samples_per_pixel must be >= 1, got {self.samples_per_pixel}")
        if self.max_bounces < 1:
            raise ValueError(f"max_bounces must be >= 1, got {self.max_bounces}")
        if not self.exposure > 0:
            raise ValueError(f"exposure must be > 0, got {self.exposure}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")


@dataclass(frozen=True)
class FrameMeta:
    """Pose ground truth attached to every rendered frame."""

    altitude_m: float
    camera_rotation_wxyz: tuple[float, float, float, float]
    object_rotation_wxyz: tuple[float, float, float, float]
    seed: int

    def to_dict(self) -> dict:
        return {
            "altitude_m": self.altitude_m,
            "camera_rotation_wxyz": list(self.camera_rotation_wxyz),
            "object_rotation_wxyz": list(self.object_rotation_wxyz),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FrameMeta":
        missing = {"altitude_m", "camera_rotation_wxyz", "object_rotation_wxyz",
                   "seed"} - d.keys()
        if missing:
            raise ValueError(f"frame metadata missing fields: {sorted(missing)}")
        return cls(altitude_m=float(d["altitude_m"]),
                   camera_rotation_wxyz=tuple(float(v) for v in d["camera_rotation_wxyz"]),
                   object_rotation_wxyz=tuple(float(v) for v in d["object_rotation_wxyz"]),
                   seed=int(d["seed"]))


@dataclass
class RenderOutput:
    """One frame: linear radiance, tone-mapped bytes, object mask, and pose meta."""

    radiance: np.ndarray  # (h, w, 3) float32, finite, >= 0
    rgb8: np.ndarray      # (h, w, 3) uint8 == tone_map(radiance, exposure)
    mask: np.ndarray      # (h, w) bool, object-of-interest primary visibility
    meta: FrameMeta


def tone_map(radiance: np.ndarray, exposure: float = 1.0) -> np.ndarray:
    """Filmic-ish exponential tone curve with gamma 2.2.

    Per channel: v8 = round(255 * clamp(1 - exp(-exposure * v), 0, 1) ** (1 / 2.2)).
    """
    r = np.asarray(radiance)
    if not np.all(np.isfinite(r)):
        raise RenderError("tone_map input contains non-finite radiance")
    mapped = np.clip(1.0 - np.exp(-float(exposure) * r.astype(np.float64)), 0.0, 1.0)
    return np.floor(255.0 * mapped ** (1.0 / 2.2) + 0.5).astype(np.uint8)


def transmittance(medium: WaterMedium, distance: float) -> np.ndarray:
    """Beam transmittance exp(-sigma_t * distance) per RGB channel."""
    if distance < 0:
        raise ValueError(f"distance must be >= 0, got {distance}")
    return np.exp(-medium.sigma_t * float(distance))


def _tiles(width: int, height: int) -> list[tuple[int, int, int, int]]:
    out = []
    for y0 in range(0, height, TILE):
        for x0 in range(0, width, TILE):
            out.append((x0, min(x0 + TILE, width), y0, min(y0 + TILE, height)))
    return out


def _camera_args(camera: CameraRig) -> tuple:
    right, up, forward = camera.basis
    return (camera.position, right, up, forward,
            camera.tan_half_hfov, camera.tan_half_vfov,
            camera.image_width, camera.image_height)


def render_frame(scene: Scene, settings: RenderSettings,
                 camera: CameraRig | None = None, workers: int = 1,
                 frame_index: int = 0) -> RenderOutput:
    """Path-trace one frame.

    Output is bit-identical for identical (scene, camera, settings, seed,
    frame_index) regardless of ``workers``: every pixel's RNG stream is keyed
    by (seed, frame_index, pixel, sample), never by the schedule.
    """
    if camera is not None:
        scene = scene.with_camera(camera)
    cam = scene.camera
    w, h = cam.image_width, cam.image_height
    out = np.zeros((h, w, 3), dtype=np.float64)
    cam_args = _camera_args(cam)
    geom = scene.kernel_geom()
    args = (settings.samples_per_pixel, settings.max_bounces,
            np.uint64(settings.seed), np.uint64(frame_index),
            *cam_args, *geom,
            scene.tri_normal, scene.tri_mat, scene.tri_inst, scene.mat_albedo,
            scene.has_water, scene.water_depth,
            scene.sigma_a, scene.sigma_s, scene.sigma_t, scene.sigma_maj,
            scene.hg_g, scene.wave,
            scene.has_floor, scene.floor_a, scene.floor_b, scene.floor_tile,
            scene.sun_dir, scene.sun_irr, scene.sky)

    tiles = _tiles(w, h)
    if workers <= 1 or len(tiles) == 1:
        for t in tiles:
            kernels.render_tile(out, *t, *args)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(kernels.render_tile, out, *t, *args) for t in tiles]
            for f in futures:
                f.result()

    if not np.all(np.isfinite(out)):
        bad = np.argwhere(~np.isfinite(out).all(axis=2))[0]
        raise RenderError(f"non-finite radiance at pixel (x={bad[1]}, y={bad[0]}); "
                          f"seed={settings.seed} frame={frame_index}")
    if out.min() < 0:
        raise RenderError("negative radiance sample")
    radiance = out.astype(np.float32)
    mask = id_pass(scene)
    meta = FrameMeta(
        altitude_m=float(cam.altitude),
        camera_rotation_wxyz=tuple(float(v) for v in cam.rotation_quat()),
        object_rotation_wxyz=tuple(float(v) for v in scene.spec.object_rotation_quat()),
        seed=settings.seed,
    )
    return RenderOutput(radiance=radiance, rgb8=tone_map(radiance, settings.exposure),
                        mask=mask, meta=meta)


def id_pass(scene: Scene, camera: CameraRig | None = None) -> np.ndarray:
    """Binary object-of-interest visibility through pixel centers.

    Water is treated as fully transparent (no refraction bend); the mask is
    true where the first non-water surface hit belongs to the object.
    """
    cam = camera if camera is not None else scene.camera
    w, h = cam.image_width, cam.image_height
    mask = np.zeros((h, w), dtype=np.bool_)
    kernels.id_tile(mask, 0, w, 0, h, *_camera_args(cam), *scene.kernel_geom(),
                    scene.tri_inst, OBJECT_INSTANCE_ID,
                    scene.has_floor, scene.water_depth)
    return mask


# ---------------------------------------------------------------------------
# file output

def write_png(path, array: np.ndarray) -> None:
    """8-bit PNG: RGB for (h, w, 3) uint8, grayscale 0/255 for boolean masks."""
    path = Path(path)
    if array.dtype == np.bool_:
        img = Image.fromarray((array * np.uint8(255)), mode="L")
    elif array.dtype == np.uint8 and array.ndim == 3:
        img = Image.fromarray(array, mode="RGB")
    elif array.dtype == np.uint8 and array.ndim == 2:
        img = Image.fromarray(array, mode="L")
    else:
        raise ValueError(f"unsupported array for PNG output: {array.dtype} {array.shape}")
    img.save(path)


def read_png(path) -> np.ndarray:
    return np.asarray(Image.open(path))


def write_radiance_bin(path, radiance: np.ndarray) -> None:
    """Linear radiance dump: 8-byte header (width, height as little-endian
    uint32) followed by row-major float32 little-endian RGB triples."""
    r = np.ascontiguousarray(radiance, dtype="<f4")
    h, w = r.shape[:2]
    with open(path, "wb") as fh:
        fh.write(struct.pack("<II", w, h))
        fh.write(r.tobytes())


def read_radiance_bin(path) -> np.ndarray:
    with open(path, "rb") as fh:
        w, h = struct.unpack("<II", fh.read(8))
        data = np.frombuffer(fh.read(), dtype="<f4")
    return data.reshape(h, w, 3)
