"""Scene description and assembly: water medium presets, camera rig, world building.

A ``SceneSpec`` is the declarative description (object mesh + pose, water,
distractors, sun, camera); ``assemble_scene`` validates it and flattens all
geometry into a ``Scene`` holding the BVH and the plain arrays the render
kernels consume. An assembled Scene is immutable by convention and safe to
share across render workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import bvh as bvh_mod
from .errors import SceneError
from .geometry import TriangleMesh, quat_from_matrix, quat_identity, quat_to_matrix

MAX_IMAGE_DIM = 30_000  # hard resolution cap per image axis
WATER_IOR = 1.33

WATER_TINTS = {
    "brown": (0.35, 0.25, 0.12),
    "blue": (0.05, 0.20, 0.40),
    "green": (0.10, 0.35, 0.18),
}
TURBIDITY_SIGMA_S = {
    "low": (0.05, 0.05, 0.05),
    "high": (0.60, 0.60, 0.60),
}
_ABSORB_SCALE = 0.3      # sigma_a = scale * (1 - tint), per preset definition
_PRESET_DEPTH_M = 3.0    # water column depth used by the named presets
_PRESET_PHASE_G = 0.8    # forward-scattering water


@dataclass(frozen=True)
class WaterMedium:
    """Homogeneous water volume: absorption/scattering per RGB channel (1/m),
    Henyey-Greenstein asymmetry, and column depth in meters."""

    sigma_a: np.ndarray
    sigma_s: np.ndarray
    phase_g: float = _PRESET_PHASE_G
    depth: float = _PRESET_DEPTH_M

    def __post_init__(self) -> None:
        object.__setattr__(self, "sigma_a", np.asarray(self.sigma_a, dtype=np.float64))
        object.__setattr__(self, "sigma_s", np.asarray(self.sigma_s, dtype=np.float64))
        if self.sigma_a.shape != (3,) or self.sigma_s.shape != (3,):
            raise SceneError("sigma_a and sigma_s must be RGB triples")
        if (self.sigma_a < 0).any() or (self.sigma_s < 0).any():
            raise SceneError("absorption and scattering coefficients must be >= 0")
        if not -1.0 < self.phase_g < 1.0:
            raise SceneError(f"phase_g must lie in (-1, 1), got {self.phase_g}")
        if not self.depth > 0:
            raise SceneError(f"water depth must be > 0, got {self.depth}")

    @property
    def sigma_t(self) -> np.ndarray:
        return self.sigma_a + self.sigma_s

    def albedo(self) -> np.ndarray:
        """Single-scattering albedo sigma_s / sigma_t (0 where sigma_t = 0)."""
        st = self.sigma_t
        return np.where(st > 0, self.sigma_s / np.where(st > 0, st, 1.0), 0.0)


def water_preset(color_name: str, turbidity_level: str,
                 depth: float = _PRESET_DEPTH_M) -> tuple[WaterMedium, tuple[float, float, float]]:
    """Named coastal-water preset -> (medium, base color tint).

    Colors: brown, blue, green. Turbidity: low (seafloor visible in a shallow
    scene), high (seafloor obscured by scattering). High turbidity has strictly
    larger sigma_s than low, componentwise, for every color.
    """
    try:
        tint = WATER_TINTS[color_name]
    except KeyError:
        raise SceneError(f"unknown water color {color_name!r}; "
                         f"choices: {sorted(WATER_TINTS)}") from None
    try:
        sigma_s = TURBIDITY_SIGMA_S[turbidity_level]
    except KeyError:
        raise SceneError(f"unknown turbidity level {turbidity_level!r}; "
                         f"choices: {sorted(TURBIDITY_SIGMA_S)}") from None
    sigma_a = _ABSORB_SCALE * (1.0 - np.asarray(tint))
    return WaterMedium(sigma_a, np.asarray(sigma_s), _PRESET_PHASE_G, depth), tint


@dataclass(frozen=True)
class CameraRig:
    """Pinhole camera on an orbit circle, fixated on a target point.

    The camera sits at height ``altitude`` above the water plane (z = 0), on a
    circle of radius ``orbit_radius`` around the target's xy position, and its
    view axis passes exactly through the target.
    """

    altitude: float
    orbit_angle: float
    target: np.ndarray
    vertical_fov: float
    image_width: int
    image_height: int
    orbit_radius: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "target", np.asarray(self.target, dtype=np.float64))
        if not self.altitude > 0:
            raise SceneError(f"camera altitude must be > 0, got {self.altitude}")
        if not 0 < self.vertical_fov < math.pi:
            raise SceneError(f"vertical_fov must lie in (0, pi), got {self.vertical_fov}")
        for name, dim in (("image_width", self.image_width), ("image_height", self.image_height)):
            if not 1 <= dim <= MAX_IMAGE_DIM:
                raise SceneError(f"{name} must lie in [1, {MAX_IMAGE_DIM}], got {dim}")
        if self.orbit_radius < 0:
            raise SceneError(f"orbit_radius must be >= 0, got {self.orbit_radius}")
        if self.target.shape != (3,) or not np.all(np.isfinite(self.target)):
            raise SceneError("camera target must be a finite 3D point")
        if np.linalg.norm(self.target - self.position) == 0:
            raise SceneError("camera position coincides with its target")

    @property
    def position(self) -> np.ndarray:
        return np.array([
            self.target[0] + self.orbit_radius * math.cos(self.orbit_angle),
            self.target[1] + self.orbit_radius * math.sin(self.orbit_angle),
            self.altitude,
        ])

    @cached_property
    def basis(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(right, up, forward) orthonormal camera frame, forward through the target."""
        forward = self.target - self.position
        forward = forward / np.linalg.norm(forward)
        hint = np.array([0.0, 0.0, 1.0])
        right = np.cross(forward, hint)
        if np.linalg.norm(right) < 1e-8:
            right = np.cross(forward, np.array([0.0, 1.0, 0.0]))
        right = right / np.linalg.norm(right)
        up = np.cross(right, forward)
        return right, up, forward

    @property
    def tan_half_vfov(self) -> float:
        return math.tan(self.vertical_fov / 2)

    @property
    def tan_half_hfov(self) -> float:
        return self.tan_half_vfov * self.image_width / self.image_height

    def rotation_quat(self) -> np.ndarray:
        """Camera orientation as a (w, x, y, z) quaternion.

        Maps the camera frame (x = image right, y = image up, z = backward,
        i.e. opposite the view direction) into world coordinates.
        """
        right, up, forward = self.basis
        return quat_from_matrix(np.column_stack([right, up, -forward]))

    def project(self, point: np.ndarray) -> tuple[float, float, bool]:
        """World point -> (pixel x, pixel y, in_front_of_camera)."""
        right, up, forward = self.basis
        rel = np.asarray(point, dtype=np.float64) - self.position
        x, y, z = rel @ right, rel @ up, rel @ forward
        if z <= 0:
            return math.nan, math.nan, False
        px = 0.5 * self.image_width * (1.0 + x / (z * self.tan_half_hfov))
        py = 0.5 * self.image_height * (1.0 - y / (z * self.tan_half_vfov))
        return px, py, True


def place_camera(altitude: float, orbit_angle: float, target, fov: float,
                 width: int, height: int, orbit_radius: float = 0.0) -> CameraRig:
    """Build a fixated camera rig; see CameraRig for the geometry."""
    return CameraRig(altitude=altitude, orbit_angle=orbit_angle,
                     target=np.asarray(target, dtype=np.float64), vertical_fov=fov,
                     image_width=int(width), image_height=int(height),
                     orbit_radius=orbit_radius)


@dataclass
class MeshInstance:
    """A mesh with a rigid pose and a flat albedo table (one row per material id)."""

    mesh: TriangleMesh
    rotation_wxyz: np.ndarray = field(default_factory=quat_identity)
    translation: np.ndarray | None = None  # None -> auto-float (see SceneSpec)
    albedos: np.ndarray | None = None      # (k, 3); defaults filled at assembly

    def __post_init__(self) -> None:
        self.rotation_wxyz = np.asarray(self.rotation_wxyz, dtype=np.float64)
        if self.translation is not None:
            self.translation = np.asarray(self.translation, dtype=np.float64)
        if self.albedos is not None:
            self.albedos = np.atleast_2d(np.asarray(self.albedos, dtype=np.float64))

    def placed(self, default_xy=(0.0, 0.0)) -> TriangleMesh:
        """Mesh in world space. With no explicit translation the instance floats:
        xy at ``default_xy`` and the waterline (z = 0) at its vertical midpoint."""
        rotated = self.mesh.transformed(rotation_wxyz=self.rotation_wxyz)
        if self.translation is not None:
            return rotated.transformed(translation=self.translation)
        lo, hi = rotated.bounds()
        auto = np.array([default_xy[0], default_xy[1], -(lo[2] + hi[2]) / 2])
        return rotated.transformed(translation=auto)


# default appearance knobs
DEFAULT_OBJECT_ALBEDOS = np.array([
    [0.80, 0.72, 0.18],   # hull: high-visibility yellow
    [0.12, 0.14, 0.20],   # floats: dark housing
    [0.30, 0.32, 0.35],   # thrusters: gray
])
DEFAULT_DISTRACTOR_ALBEDO = np.array([0.45, 0.40, 0.32])
DEFAULT_FLOOR_A = np.array([0.62, 0.56, 0.44])
DEFAULT_FLOOR_B = np.array([0.34, 0.31, 0.25])
DEFAULT_SUN_DIRECTION = np.array([0.3, 0.2, 1.0])
DEFAULT_SUN_IRRADIANCE = np.array([4.0, 4.0, 4.0])
DEFAULT_SKY_RADIANCE = np.array([0.30, 0.36, 0.46])


@dataclass
class SceneSpec:
    """Full declarative description of one renderable world."""

    object_instance: MeshInstance
    camera: CameraRig
    water: WaterMedium | None = None
    water_tint: np.ndarray = field(default_factory=lambda: np.array([0.05, 0.20, 0.40]))
    surface_wave_amplitude: float = 0.02
    distractors: list[MeshInstance] = field(default_factory=list)
    sun_direction: np.ndarray = field(default_factory=lambda: DEFAULT_SUN_DIRECTION.copy())
    sun_irradiance: np.ndarray = field(default_factory=lambda: DEFAULT_SUN_IRRADIANCE.copy())
    sky_radiance: np.ndarray = field(default_factory=lambda: DEFAULT_SKY_RADIANCE.copy())
    floor_albedo_a: np.ndarray = field(default_factory=lambda: DEFAULT_FLOOR_A.copy())
    floor_albedo_b: np.ndarray = field(default_factory=lambda: DEFAULT_FLOOR_B.copy())
    floor_tile_m: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        self.water_tint = np.asarray(self.water_tint, dtype=np.float64)
        self.sun_direction = np.asarray(self.sun_direction, dtype=np.float64)
        self.sun_irradiance = np.asarray(self.sun_irradiance, dtype=np.float64)
        self.sky_radiance = np.asarray(self.sky_radiance, dtype=np.float64)
        n = np.linalg.norm(self.sun_direction)
        if n == 0:
            raise SceneError("sun direction must be nonzero")
        self.sun_direction = self.sun_direction / n
        if self.sun_direction[2] <= 0:
            raise SceneError("sun direction must have a positive upward component")
        if (self.sun_irradiance < 0).any():
            raise SceneError("sun irradiance must be >= 0")
        if ((self.water_tint < 0) | (self.water_tint > 1)).any():
            raise SceneError("water tint components must lie in [0, 1]")
        if self.surface_wave_amplitude < 0:
            raise SceneError("surface wave amplitude must be >= 0")
        if not 0 <= self.seed < 2 ** 64:
            raise SceneError("seed must fit in an unsigned 64-bit integer")

    def object_rotation_quat(self) -> np.ndarray:
        from .geometry import quat_normalize
        return quat_normalize(self.object_instance.rotation_wxyz)


OBJECT_INSTANCE_ID = 1  # instance id tagged onto object-of-interest triangles


@dataclass
class Scene:
    """Assembled, immutable world: BVH + flat arrays for the render kernels."""

    # triangles, reordered to match BVH leaves
    tri_v0: np.ndarray
    tri_e1: np.ndarray
    tri_e2: np.ndarray
    tri_normal: np.ndarray
    tri_mat: np.ndarray
    tri_inst: np.ndarray
    bvh: bvh_mod.Bvh
    mat_albedo: np.ndarray
    # participating medium (zeros when absent)
    has_water: bool
    water_depth: float
    sigma_a: np.ndarray
    sigma_s: np.ndarray
    sigma_t: np.ndarray
    sigma_maj: float
    hg_g: float
    wave: np.ndarray        # (8,) amp1, kx1, ky1, ph1, amp2, kx2, ky2, ph2
    has_floor: bool
    floor_a: np.ndarray
    floor_b: np.ndarray
    floor_tile: float
    sun_dir: np.ndarray
    sun_irr: np.ndarray
    sky: np.ndarray
    camera: CameraRig
    spec: SceneSpec

    @property
    def num_triangles(self) -> int:
        return len(self.tri_v0)

    def kernel_geom(self) -> tuple:
        """Geometry argument pack shared by every kernel."""
        b = self.bvh
        return (b.node_min, b.node_max, b.node_left, b.node_count,
                self.tri_v0, self.tri_e1, self.tri_e2)

    def with_camera(self, camera: CameraRig) -> "Scene":
        """Shallow copy viewing the same world through a different rig."""
        import dataclasses
        return dataclasses.replace(self, camera=camera)


def _wave_params(amplitude: float) -> np.ndarray:
    """Two fixed sinusoid octaves; only the amplitude is configurable."""
    if amplitude <= 0:
        return np.zeros(8)
    k1 = 2 * math.pi / 1.7
    d1 = np.array([1.0, 0.6]) / math.hypot(1.0, 0.6)
    k2 = 2 * math.pi / 0.53
    d2 = np.array([-0.4, 1.0]) / math.hypot(0.4, 1.0)
    return np.array([amplitude, k1 * d1[0], k1 * d1[1], 0.7,
                     0.45 * amplitude, k2 * d2[0], k2 * d2[1], 2.1])


def _validate_placement(spec: SceneSpec, object_mesh: TriangleMesh,
                        distractor_meshes: list[TriangleMesh]) -> None:
    lo, hi = object_mesh.bounds()
    corners = np.array([[x, y, z] for x in (lo[0], hi[0])
                        for y in (lo[1], hi[1]) for z in (lo[2], hi[2])])
    center = (lo + hi) / 2
    visible = False
    for p in np.vstack([corners, center[None, :]]):
        px, py, ok = spec.camera.project(p)
        if ok and 0 <= px <= spec.camera.image_width and 0 <= py <= spec.camera.image_height:
            visible = True
            break
    if not visible:
        raise SceneError("object of interest lies outside the camera frustum")
    for i, dm in enumerate(distractor_meshes):
        dlo, dhi = dm.bounds()
        overlap = np.all(dlo <= hi) and np.all(dhi >= lo)
        if overlap:
            raise SceneError(f"distractor {i} intersects the object-of-interest bounds")


def assemble_scene(spec: SceneSpec) -> Scene:
    """Validate a SceneSpec and flatten it into a renderable Scene.

    Raises SceneError when the object is outside the camera frustum or a
    distractor overlaps the object's bounding box.
    """
    target_xy = (float(spec.camera.target[0]), float(spec.camera.target[1]))
    object_mesh = spec.object_instance.placed(default_xy=target_xy)
    distractor_meshes = [d.placed() for d in spec.distractors]
    _validate_placement(spec, object_mesh, distractor_meshes)

    albedo_rows: list[np.ndarray] = []
    tri_mat_parts: list[np.ndarray] = []
    tri_inst_parts: list[np.ndarray] = []
    v0_parts, e1_parts, e2_parts = [], [], []

    def add_instance(mesh: TriangleMesh, albedos: np.ndarray, inst_id: int) -> None:
        base = len(albedo_rows)
        for row in albedos:
            albedo_rows.append(np.asarray(row, dtype=np.float64))
        n_mats = len(albedos)
        mat = base + np.clip(mesh.material_ids, 0, n_mats - 1)
        a, b, c = mesh.corners()
        v0_parts.append(a)
        e1_parts.append(b - a)
        e2_parts.append(c - a)
        tri_mat_parts.append(mat.astype(np.int32))
        tri_inst_parts.append(np.full(mesh.num_triangles, inst_id, dtype=np.int32))

    obj_albedos = spec.object_instance.albedos
    if obj_albedos is None:
        n_mats = int(object_mesh.material_ids.max(initial=0)) + 1
        obj_albedos = DEFAULT_OBJECT_ALBEDOS[
            np.arange(n_mats) % len(DEFAULT_OBJECT_ALBEDOS)]
    add_instance(object_mesh, obj_albedos, OBJECT_INSTANCE_ID)
    for k, (inst, mesh) in enumerate(zip(spec.distractors, distractor_meshes)):
        alb = inst.albedos if inst.albedos is not None else DEFAULT_DISTRACTOR_ALBEDO[None, :]
        add_instance(mesh, alb, OBJECT_INSTANCE_ID + 1 + k)

    v0 = np.ascontiguousarray(np.vstack(v0_parts))
    e1 = np.ascontiguousarray(np.vstack(e1_parts))
    e2 = np.ascontiguousarray(np.vstack(e2_parts))
    tri_mat = np.concatenate(tri_mat_parts)
    tri_inst = np.concatenate(tri_inst_parts)

    tree = bvh_mod.build_bvh(v0, e1, e2)
    order = tree.order
    v0, e1, e2 = v0[order], e1[order], e2[order]
    tri_mat, tri_inst = tri_mat[order], tri_inst[order]
    normal = np.cross(e1, e2)
    norms = np.linalg.norm(normal, axis=1, keepdims=True)
    normal = normal / np.where(norms > 0, norms, 1.0)

    if spec.water is not None:
        sigma_a = spec.water.sigma_a
        sigma_s = spec.water.sigma_s
        sigma_t = spec.water.sigma_t
        scene_args = dict(
            has_water=True, water_depth=float(spec.water.depth),
            sigma_a=sigma_a, sigma_s=sigma_s, sigma_t=sigma_t,
            sigma_maj=float(sigma_t.max()), hg_g=float(spec.water.phase_g),
            wave=_wave_params(spec.surface_wave_amplitude),
            has_floor=True,
        )
    else:
        scene_args = dict(
            has_water=False, water_depth=1.0,
            sigma_a=np.zeros(3), sigma_s=np.zeros(3), sigma_t=np.zeros(3),
            sigma_maj=0.0, hg_g=0.0, wave=np.zeros(8), has_floor=False,
        )

    return Scene(
        tri_v0=np.ascontiguousarray(v0), tri_e1=np.ascontiguousarray(e1),
        tri_e2=np.ascontiguousarray(e2), tri_normal=np.ascontiguousarray(normal),
        tri_mat=np.ascontiguousarray(tri_mat), tri_inst=np.ascontiguousarray(tri_inst),
        bvh=tree, mat_albedo=np.ascontiguousarray(np.array(albedo_rows)),
        floor_a=spec.floor_albedo_a, floor_b=spec.floor_albedo_b,
        floor_tile=float(spec.floor_tile_m),
        sun_dir=spec.sun_direction, sun_irr=spec.sun_irradiance, sky=spec.sky_radiance,
        camera=spec.camera, spec=spec, **scene_args,
    )
