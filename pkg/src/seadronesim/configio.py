"""JSON configuration loading and validation for scenes and campaigns.

Configs are validated against the JSON Schemas shipped in ``schemas/`` first
(structural errors name the offending path), then against the domain types'
own invariants (semantic errors such as a sun pointing downward).
"""

from __future__ import annotations

import json
import math
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .campaign import CampaignSpec, MixSpec
from .errors import ConfigError
from .geometry import TriangleMesh, builtin_mesh, load_mesh, quat_from_yaw_pitch_roll
from .render import RenderSettings
from .scene import MeshInstance, SceneSpec, WaterMedium, place_camera, water_preset


def _schema(name: str) -> dict:
    with resources.files("seadronesim.schemas").joinpath(name).open("r") as fh:
        return json.load(fh)


def _validate(config: dict, schema_name: str) -> None:
    schema = _schema(schema_name)
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(config), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        path = ".".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"{path}: {e.message}")


def load_config(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with path.open("r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})") from None


def config_kind(config: dict) -> str:
    """Explicit "kind" key, else inferred from campaign-only fields."""
    if "kind" in config:
        return config["kind"]
    campaign_markers = {"frames_per_cell", "altitudes_m", "colors", "mixes"}
    return "campaign" if campaign_markers & config.keys() else "scene"


def resolve_mesh(mesh_spec: dict, base_dir: Path | None = None) -> TriangleMesh:
    """{"obj": path} loads a Wavefront file (relative to the config's
    directory); {"builtin": name, "params": {...}} builds a procedural mesh."""
    if "obj" in mesh_spec:
        p = Path(mesh_spec["obj"])
        if not p.is_absolute() and base_dir is not None:
            p = base_dir / p
        return load_mesh(p)
    return builtin_mesh(mesh_spec["builtin"], mesh_spec.get("params"))


def _instance_from(cfg: dict, base_dir: Path | None) -> MeshInstance:
    mesh = resolve_mesh(cfg["mesh"], base_dir)
    if "rotation_wxyz" in cfg:
        rot = np.asarray(cfg["rotation_wxyz"], dtype=np.float64)
    elif "yaw_pitch_roll_deg" in cfg:
        y, p, r = (math.radians(v) for v in cfg["yaw_pitch_roll_deg"])
        rot = quat_from_yaw_pitch_roll(y, p, r)
    else:
        rot = np.array([1.0, 0.0, 0.0, 0.0])
    translation = cfg.get("translation")
    albedos = cfg.get("albedos")
    if albedos is None and "albedo" in cfg:
        albedos = [cfg["albedo"]]
    return MeshInstance(mesh, rotation_wxyz=rot,
                        translation=None if translation is None else np.asarray(translation),
                        albedos=None if albedos is None else np.asarray(albedos))


def _water_from(cfg) -> tuple[WaterMedium | None, np.ndarray | None]:
    if cfg is None:
        return None, None
    depth = float(cfg.get("depth_m", 3.0))
    if "preset" in cfg:
        medium, tint = water_preset(cfg["preset"]["color"], cfg["preset"]["turbidity"],
                                    depth=depth)
        if "tint" in cfg:
            tint = cfg["tint"]
        return medium, np.asarray(tint, dtype=np.float64)
    required = {"sigma_a", "sigma_s"} - cfg.keys()
    if required:
        raise ConfigError(f"water: explicit medium needs fields {sorted(required)}")
    medium = WaterMedium(np.asarray(cfg["sigma_a"]), np.asarray(cfg["sigma_s"]),
                         phase_g=float(cfg.get("phase_g", 0.8)), depth=depth)
    tint = np.asarray(cfg.get("tint", (0.05, 0.20, 0.40)), dtype=np.float64)
    return medium, tint


def load_scene_config(config: dict, base_dir: Path | None = None
                      ) -> tuple[SceneSpec, RenderSettings]:
    """Validated scene config dict -> (SceneSpec, RenderSettings)."""
    _validate(config, "scene_schema.json")
    seed = int(config.get("seed", 0))

    cam_cfg = config["camera"]
    camera = place_camera(
        altitude=float(cam_cfg["altitude_m"]),
        orbit_angle=float(cam_cfg.get("orbit_angle_rad", 0.0)),
        target=cam_cfg.get("target", (0.0, 0.0, 0.0)),
        fov=math.radians(float(cam_cfg.get("vertical_fov_deg", 60.0))),
        width=int(cam_cfg.get("width", 832)),
        height=int(cam_cfg.get("height", 832)),
        orbit_radius=float(cam_cfg.get("orbit_radius_m", 0.0)),
    )
    water, tint = _water_from(config.get("water", {"preset": {"color": "blue",
                                                              "turbidity": "low"}}))
    kwargs: dict = {}
    if tint is not None:
        kwargs["water_tint"] = tint
    if "floor" in config:
        fl = config["floor"]
        if "albedo_a" in fl:
            kwargs["floor_albedo_a"] = np.asarray(fl["albedo_a"])
        if "albedo_b" in fl:
            kwargs["floor_albedo_b"] = np.asarray(fl["albedo_b"])
        if "tile_m" in fl:
            kwargs["floor_tile_m"] = float(fl["tile_m"])
    if "sun" in config:
        sun = config["sun"]
        if "direction" in sun:
            kwargs["sun_direction"] = np.asarray(sun["direction"])
        if "irradiance" in sun:
            kwargs["sun_irradiance"] = np.asarray(sun["irradiance"])
    if "sky_radiance" in config:
        kwargs["sky_radiance"] = np.asarray(config["sky_radiance"])

    spec = SceneSpec(
        object_instance=_instance_from(config["object"], base_dir),
        camera=camera, water=water,
        surface_wave_amplitude=float(config.get("surface_wave_amplitude", 0.02)),
        distractors=[_instance_from(d, base_dir) for d in config.get("distractors", [])],
        seed=seed, **kwargs,
    )
    settings = _render_settings(config.get("render", {}), seed)
    return spec, settings


def _render_settings(render_cfg: dict, seed: int) -> RenderSettings:
    return RenderSettings(
        samples_per_pixel=int(render_cfg.get("spp", 64)),
        max_bounces=int(render_cfg.get("max_bounces", 6)),
        exposure=float(render_cfg.get("exposure", 1.0)),
        seed=seed,
    )


def load_campaign_config(config: dict) -> CampaignSpec:
    """Validated campaign config dict -> CampaignSpec."""
    _validate(config, "campaign_schema.json")
    render_cfg = config.get("render", {})
    kwargs = {}
    for key in ("altitudes_m", "colors", "turbidities", "frames_per_cell",
                "orbit_angles", "orbit_radius_m", "output_size", "native_size",
                "split_ratio", "seed", "category_name", "distractor_count",
                "camera_fov_deg", "water_depth_m", "wave_amplitude",
                "keep_empty_frames"):
        if key in config:
            kwargs[key] = config[key]
    if "object" in config:
        kwargs["object_mesh"] = config["object"]["mesh"]
    if "mixes" in config:
        kwargs["mixes"] = tuple(MixSpec(**m) for m in config["mixes"])
    if "spp" in render_cfg:
        kwargs["spp"] = int(render_cfg["spp"])
    if "max_bounces" in render_cfg:
        kwargs["max_bounces"] = int(render_cfg["max_bounces"])
    if "exposure" in render_cfg:
        kwargs["exposure"] = float(render_cfg["exposure"])
    return CampaignSpec(**kwargs)
