import math

import numpy as np
import pytest

from seadronesim.errors import SceneError
from seadronesim.geometry import make_box, make_uv_sphere
from seadronesim.scene import (MAX_IMAGE_DIM, CameraRig, MeshInstance, SceneSpec,
                               WaterMedium, assemble_scene, place_camera,
                               water_preset)


# ---------------------------------------------------------------------------
# water presets

@pytest.mark.parametrize("color", ["brown", "blue", "green"])
def test_preset_turbidity_strictly_increases_sigma_s(color):
    low, _ = water_preset(color, "low")
    high, _ = water_preset(color, "high")
    assert (high.sigma_s > low.sigma_s).all()


@pytest.mark.parametrize("color,tint", [
    ("brown", (0.35, 0.25, 0.12)),
    ("blue", (0.05, 0.20, 0.40)),
    ("green", (0.10, 0.35, 0.18)),
])
def test_preset_tints_and_absorption(color, tint):
    medium, got_tint = water_preset(color, "low")
    assert got_tint == tint
    assert np.allclose(medium.sigma_a, 0.3 * (1 - np.asarray(tint)))


def test_preset_unknown_names():
    with pytest.raises(SceneError, match="unknown water color"):
        water_preset("purple", "low")
    with pytest.raises(SceneError, match="unknown turbidity"):
        water_preset("blue", "medium")


def test_water_medium_invariants():
    with pytest.raises(SceneError):
        WaterMedium(np.array([-0.1, 0, 0]), np.zeros(3))
    with pytest.raises(SceneError):
        WaterMedium(np.zeros(3), np.zeros(3), phase_g=1.0)
    with pytest.raises(SceneError):
        WaterMedium(np.zeros(3), np.zeros(3), depth=0.0)
    m = WaterMedium(np.array([0.1, 0.2, 0.3]), np.array([0.4, 0.0, 0.6]))
    assert np.allclose(m.sigma_t, [0.5, 0.2, 0.9])
    assert (m.albedo() <= 1.0).all()


# ---------------------------------------------------------------------------
# camera

def test_nadir_view_direction():
    cam = place_camera(10.0, 0.3, (0, 0, 0), math.radians(60), 64, 64, orbit_radius=0.0)
    _, _, forward = cam.basis
    assert np.allclose(forward, [0, 0, -1])
    assert np.allclose(cam.position, [0, 0, 10])


def test_fixation_target_projects_to_center():
    rng = np.random.default_rng(3)
    for _ in range(40):
        cam = place_camera(
            altitude=float(rng.uniform(1, 50)),
            orbit_angle=float(rng.uniform(0, 2 * math.pi)),
            target=rng.uniform(-3, 3, 3) * np.array([1, 1, 0]),
            fov=float(rng.uniform(0.3, 2.0)),
            width=int(rng.integers(16, 1024)),
            height=int(rng.integers(16, 1024)),
            orbit_radius=float(rng.uniform(0, 20)),
        )
        px, py, ok = cam.project(cam.target)
        assert ok
        assert abs(px - cam.image_width / 2) <= 0.5
        assert abs(py - cam.image_height / 2) <= 0.5


def test_camera_errors():
    with pytest.raises(SceneError, match="altitude"):
        place_camera(0.0, 0, (0, 0, 0), 1.0, 64, 64)
    with pytest.raises(SceneError, match="image_width"):
        place_camera(10, 0, (0, 0, 0), 1.0, MAX_IMAGE_DIM + 1, 64)
    with pytest.raises(SceneError, match="vertical_fov"):
        place_camera(10, 0, (0, 0, 0), math.pi, 64, 64)
    with pytest.raises(SceneError, match="orbit_radius"):
        place_camera(10, 0, (0, 0, 0), 1.0, 64, 64, orbit_radius=-1)


def test_nadir_rotation_quaternion_is_identity():
    cam = place_camera(5.0, 0.0, (0, 0, 0), 1.0, 32, 32)
    assert np.allclose(cam.rotation_quat(), [1, 0, 0, 0], atol=1e-12)


def test_orbit_positions():
    cam = place_camera(7.0, math.pi / 2, (1.0, 2.0, 0.0), 1.0, 32, 32, orbit_radius=3.0)
    assert np.allclose(cam.position, [1.0, 5.0, 7.0], atol=1e-12)


# ---------------------------------------------------------------------------
# scene assembly

def _spec(**kwargs):
    medium, tint = water_preset("blue", "low")
    defaults = dict(
        object_instance=MeshInstance(make_uv_sphere(0.5, rings=8, segments=12)),
        camera=place_camera(10.0, 0.0, (0, 0, 0), math.radians(60), 64, 64),
        water=medium, water_tint=np.asarray(tint),
    )
    defaults.update(kwargs)
    return SceneSpec(**defaults)


def test_assemble_object_only_triangle_count():
    mesh = make_uv_sphere(0.5, rings=8, segments=12)
    scene = assemble_scene(_spec(object_instance=MeshInstance(mesh)))
    assert scene.num_triangles == mesh.num_triangles


def test_assemble_distractors_additive():
    d = [MeshInstance(make_box((0.5, 0.5, 0.5)), translation=np.array([3.0, 0, -2.5])),
         MeshInstance(make_box((0.5, 0.5, 0.5)), translation=np.array([-3.0, 0, -2.5])),
         MeshInstance(make_box((0.5, 0.5, 0.5)), translation=np.array([0, 3.0, -2.5]))]
    spec = _spec(distractors=d)
    scene = assemble_scene(spec)
    expected = (spec.object_instance.mesh.num_triangles
                + sum(i.mesh.num_triangles for i in d))
    assert scene.num_triangles == expected
    assert set(np.unique(scene.tri_inst)) == {1, 2, 3, 4}


def test_object_outside_frustum_rejected():
    spec = _spec(object_instance=MeshInstance(
        make_uv_sphere(0.5), translation=np.array([100.0, 0.0, 0.0])))
    with pytest.raises(SceneError, match="frustum"):
        assemble_scene(spec)


def test_distractor_overlap_rejected():
    spec = _spec(distractors=[MeshInstance(make_box((1, 1, 1)),
                                           translation=np.array([0.0, 0.0, 0.0]))])
    with pytest.raises(SceneError, match="distractor"):
        assemble_scene(spec)


def test_sun_must_point_up():
    with pytest.raises(SceneError, match="sun"):
        _spec(sun_direction=np.array([0.0, 0.0, -1.0]))


def test_auto_float_waterline_at_midpoint():
    mesh = make_box((1.0, 1.0, 0.8))
    mesh.vertices[:, 2] += 5.0  # model authored far from origin
    inst = MeshInstance(mesh)
    placed = inst.placed()
    lo, hi = placed.bounds()
    assert (lo[2] + hi[2]) / 2 == pytest.approx(0.0, abs=1e-12)


def test_scene_arrays_match_bvh_order():
    scene = assemble_scene(_spec())
    assert scene.tri_v0.shape == scene.tri_normal.shape
    norms = np.linalg.norm(scene.tri_normal, axis=1)
    assert np.allclose(norms, 1.0)
    assert scene.mat_albedo.ndim == 2
    assert scene.tri_mat.max() < len(scene.mat_albedo)
