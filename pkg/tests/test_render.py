import dataclasses
import math

import numpy as np
import pytest

import oracles
from seadronesim import kernels
from seadronesim.bvh import build_bvh
from seadronesim.errors import RenderError
from seadronesim.geometry import make_box, make_uv_sphere
from seadronesim.render import (RenderSettings, id_pass, read_png, read_radiance_bin,
                                render_frame, tone_map, transmittance, write_png,
                                write_radiance_bin)
from seadronesim.scene import (MeshInstance, SceneSpec, WaterMedium, assemble_scene,
                               place_camera, water_preset)


# ---------------------------------------------------------------------------
# transmittance

def test_transmittance_zero_distance():
    m, _ = water_preset("brown", "high")
    assert np.allclose(transmittance(m, 0.0), [1, 1, 1])


def test_transmittance_closed_form():
    m = WaterMedium(sigma_a=np.full(3, 0.2), sigma_s=np.full(3, 0.3))
    t = transmittance(m, 2.0)
    assert np.allclose(t, math.exp(-1.0))


def test_transmittance_negative_distance():
    m, _ = water_preset("blue", "low")
    with pytest.raises(ValueError, match="distance"):
        transmittance(m, -0.1)


def test_transmittance_monotone_nonincreasing():
    m, _ = water_preset("green", "high")
    ds = np.linspace(0, 10, 50)
    vals = np.array([transmittance(m, d) for d in ds])
    assert (np.diff(vals, axis=0) <= 1e-15).all()


def test_transmittance_matches_free_flight_sampling():
    rng = np.random.default_rng(123)
    m = WaterMedium(sigma_a=np.array([0.11, 0.23, 0.05]),
                    sigma_s=np.array([0.31, 0.07, 0.44]))
    d = 1.7
    n = 1_000_000
    estimate = oracles.free_flight_survival(m.sigma_t, d, n, rng)
    exact = transmittance(m, d)
    se = np.sqrt(exact * (1 - exact) / n)
    assert (np.abs(estimate - exact) <= 3 * se + 1e-12).all()


# ---------------------------------------------------------------------------
# tone mapping

def test_tone_map_anchors():
    assert tone_map(np.array([0.0]))[0] == 0
    assert tone_map(np.array([1e9]))[0] == 255
    assert tone_map(np.array([math.log(2)]), exposure=1.0)[0] == 186


def test_tone_map_monotone():
    v = np.linspace(0, 20, 500)
    out = tone_map(v)
    assert (np.diff(out.astype(int)) >= 0).all()


def test_tone_map_rejects_nan():
    with pytest.raises(RenderError):
        tone_map(np.array([np.nan]))


# ---------------------------------------------------------------------------
# render_frame

def _column_spec(**kw):
    medium, tint = water_preset("blue", "low")
    defaults = dict(
        object_instance=MeshInstance(make_uv_sphere(0.3, rings=8, segments=12)),
        camera=place_camera(10.0, 0.0, (0, 0, 0), math.radians(60), 48, 48),
        water=medium, water_tint=np.asarray(tint), seed=5,
    )
    defaults.update(kw)
    return SceneSpec(**defaults)


def test_no_light_renders_all_zero(sphere_scene):
    scene = dataclasses.replace(
        sphere_scene,
        tri_v0=np.zeros((0, 3)), tri_e1=np.zeros((0, 3)), tri_e2=np.zeros((0, 3)),
        tri_normal=np.zeros((0, 3)), tri_mat=np.zeros(0, np.int32),
        tri_inst=np.zeros(0, np.int32),
        bvh=build_bvh(np.zeros((0, 3)), np.zeros((0, 3)), np.zeros((0, 3))),
        has_water=False, has_floor=False,
        sun_irr=np.zeros(3), sky=np.zeros(3),
    )
    out = render_frame(scene, RenderSettings(samples_per_pixel=4, seed=1))
    assert out.radiance.max() == 0.0
    assert out.rgb8.max() == 0
    assert not out.mask.any()


def test_render_deterministic_across_workers(sphere_scene, fast_settings):
    a = render_frame(sphere_scene, fast_settings, workers=1)
    b = render_frame(sphere_scene, fast_settings, workers=3)
    assert np.array_equal(a.radiance, b.radiance)
    assert np.array_equal(a.rgb8, b.rgb8)
    assert np.array_equal(a.mask, b.mask)


def test_render_seed_changes_noise(sphere_scene):
    a = render_frame(sphere_scene, RenderSettings(samples_per_pixel=4, seed=1))
    b = render_frame(sphere_scene, RenderSettings(samples_per_pixel=4, seed=2))
    assert not np.array_equal(a.radiance, b.radiance)


def test_rgb8_recomputable_from_radiance(sphere_scene, fast_settings):
    out = render_frame(sphere_scene, fast_settings)
    assert np.array_equal(out.rgb8, tone_map(out.radiance, fast_settings.exposure))


def test_radiance_finite_nonnegative(sphere_scene, fast_settings):
    out = render_frame(sphere_scene, fast_settings)
    assert np.isfinite(out.radiance).all()
    assert (out.radiance >= 0).all()


def test_energy_bound(sphere_scene):
    out = render_frame(sphere_scene, RenderSettings(samples_per_pixel=16, seed=9))
    bound = 10.0 * sphere_scene.sun_irr.max()
    assert out.radiance.max() <= bound


def test_meta_populated(sphere_scene, fast_settings):
    out = render_frame(sphere_scene, fast_settings)
    assert out.meta.altitude_m == 10.0
    assert out.meta.seed == fast_settings.seed
    assert np.allclose(out.meta.object_rotation_wxyz, [1, 0, 0, 0])
    q = np.asarray(out.meta.camera_rotation_wxyz)
    assert np.linalg.norm(q) == pytest.approx(1.0)


def test_nan_radiance_aborts(sphere_scene, fast_settings, monkeypatch):
    def poisoned(out, x0, x1, y0, y1, *args):
        out[y0:y1, x0:x1, :] = np.nan

    monkeypatch.setattr(kernels, "render_tile", poisoned)
    with pytest.raises(RenderError, match="non-finite"):
        render_frame(sphere_scene, fast_settings)


def test_settings_validation():
    with pytest.raises(ValueError):
        RenderSettings(samples_per_pixel=0)
    with pytest.raises(ValueError):
        RenderSettings(max_bounces=0)
    with pytest.raises(ValueError):
        RenderSettings(exposure=0.0)


# ---------------------------------------------------------------------------
# id pass

def test_id_pass_sphere_disc_area():
    spec = _column_spec(
        object_instance=MeshInstance(make_uv_sphere(1.0, rings=64, segments=128)),
        camera=place_camera(10.0, 0.0, (0, 0, 0), math.radians(60), 416, 416),
    )
    scene = assemble_scene(spec)
    mask = id_pass(scene)
    r_px = (416 / 2) / math.tan(math.radians(30)) * math.tan(math.asin(1.0 / 10.0))
    expected = math.pi * r_px ** 2
    assert mask.sum() == pytest.approx(expected, rel=0.02)


def test_id_pass_occluded_object_masks_false():
    blocker = MeshInstance(make_box((2.0, 2.0, 0.2)), translation=np.array([0, 0, 5.0]))
    spec = _column_spec(
        object_instance=MeshInstance(make_uv_sphere(0.4, rings=16, segments=24)),
        distractors=[blocker],
    )
    scene = assemble_scene(spec)
    assert not id_pass(scene).any()


def test_id_pass_camera_looking_away_is_empty():
    spec = _column_spec()
    scene = assemble_scene(spec)
    away = place_camera(10.0, 0.0, (100.0, 0.0, 5.0), math.radians(60), 48, 48)
    assert not id_pass(scene, camera=away).any()


def test_id_pass_sees_through_water_surface():
    # fully submerged object is still visible in the id pass
    spec = _column_spec(object_instance=MeshInstance(
        make_uv_sphere(0.3, rings=16, segments=24), translation=np.array([0, 0, -1.0])))
    scene = assemble_scene(spec)
    assert id_pass(scene).sum() > 0


def test_mask_true_pixels_have_object_contribution():
    # medium removed: every mask-true pixel must carry some light
    spec = _column_spec(water=None)
    scene = assemble_scene(spec)
    out = render_frame(scene, RenderSettings(samples_per_pixel=32, seed=2))
    lum = out.radiance.astype(np.float64).sum(axis=2)
    assert out.mask.sum() > 0
    assert (lum[out.mask] > 0).all()


# ---------------------------------------------------------------------------
# file formats

def test_radiance_bin_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    r = rng.uniform(0, 3, (5, 7, 3)).astype(np.float32)
    write_radiance_bin(tmp_path / "r.bin", r)
    back = read_radiance_bin(tmp_path / "r.bin")
    assert back.shape == (5, 7, 3)
    assert np.array_equal(back, r)
    raw = (tmp_path / "r.bin").read_bytes()
    assert len(raw) == 8 + 5 * 7 * 3 * 4
    assert int.from_bytes(raw[0:4], "little") == 7
    assert int.from_bytes(raw[4:8], "little") == 5


def test_png_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    rgb = rng.integers(0, 256, (16, 16, 3), dtype=np.uint8)
    write_png(tmp_path / "a.png", rgb)
    assert np.array_equal(read_png(tmp_path / "a.png"), rgb)
    mask = rng.uniform(size=(16, 16)) > 0.5
    write_png(tmp_path / "m.png", mask)
    stored = read_png(tmp_path / "m.png")
    assert set(np.unique(stored)) <= {0, 255}
    assert np.array_equal(stored > 0, mask)
