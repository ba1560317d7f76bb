import numpy as np
import pytest

from seadronesim.bvh import (STACK_DEPTH, build_bvh, brute_force_closest,
                             bvh_any_hit, bvh_closest_hit)
from seadronesim.geometry import make_box, make_cone, make_uv_sphere, merge_meshes


def _tri_arrays(mesh):
    a, b, c = mesh.corners()
    return a, b - a, c - a


def _composite_mesh():
    parts = [make_uv_sphere(1.0, rings=24, segments=48)]
    sphere2 = make_uv_sphere(0.5, rings=12, segments=24)
    sphere2.vertices += np.array([2.0, 0.5, -0.5])
    parts.append(sphere2)
    box = make_box((1.0, 2.0, 0.5))
    box.vertices += np.array([-2.0, 1.0, 0.2])
    parts.append(box)
    cone = make_cone(0.7, 1.5, segments=20)
    cone.vertices += np.array([0.5, -2.0, -1.0])
    parts.append(cone)
    return merge_meshes(parts)


def test_bvh_matches_brute_force_on_random_rays():
    mesh = _composite_mesh()
    v0, e1, e2 = _tri_arrays(mesh)
    tree = build_bvh(v0, e1, e2)
    v0, e1, e2 = v0[tree.order], e1[tree.order], e2[tree.order]
    stack = np.empty(STACK_DEPTH, dtype=np.int32)
    rng = np.random.default_rng(42)
    hits = 0
    for k in range(10_000):
        o = rng.uniform(-4, 4, 3)
        if k % 2 == 0:
            aim = rng.uniform(-2.5, 2.5, 3)  # toward the geometry half the time
            d = aim - o
        else:
            d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        tb, ib = brute_force_closest(o, d, v0, e1, e2)
        tk, ik = bvh_closest_hit(o[0], o[1], o[2], d[0], d[1], d[2], np.inf,
                                 tree.node_min, tree.node_max, tree.node_left,
                                 tree.node_count, v0, e1, e2, stack)
        assert (ib >= 0) == (ik >= 0)
        if ib >= 0:
            hits += 1
            assert tk == pytest.approx(tb, rel=1e-9)
            if ik != ib:  # tie between coincident-surface triangles
                tb2, _ = brute_force_closest(o, d, v0[ik:ik + 1], e1[ik:ik + 1],
                                             e2[ik:ik + 1])
                assert tb2 == pytest.approx(tb, rel=1e-12)
    assert hits > 300  # the ray set must actually exercise the tree


def test_any_hit_agrees_with_closest():
    mesh = _composite_mesh()
    v0, e1, e2 = _tri_arrays(mesh)
    tree = build_bvh(v0, e1, e2)
    v0, e1, e2 = v0[tree.order], e1[tree.order], e2[tree.order]
    stack = np.empty(STACK_DEPTH, dtype=np.int32)
    rng = np.random.default_rng(7)
    for _ in range(1000):
        o = rng.uniform(-4, 4, 3)
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        tmax = float(rng.uniform(0.5, 8.0))
        _, ik = bvh_closest_hit(o[0], o[1], o[2], d[0], d[1], d[2], tmax,
                                tree.node_min, tree.node_max, tree.node_left,
                                tree.node_count, v0, e1, e2, stack)
        blocked = bvh_any_hit(o[0], o[1], o[2], d[0], d[1], d[2], tmax,
                              tree.node_min, tree.node_max, tree.node_left,
                              tree.node_count, v0, e1, e2, stack)
        assert blocked == (ik >= 0)


def test_leaves_bound_their_triangles():
    mesh = _composite_mesh()
    v0, e1, e2 = _tri_arrays(mesh)
    tree = build_bvh(v0, e1, e2)
    v0, e1, e2 = v0[tree.order], e1[tree.order], e2[tree.order]
    v1, v2 = v0 + e1, v0 + e2
    for i in range(len(tree.node_left)):
        if tree.node_count[i] == 0:
            continue
        s, n = tree.node_left[i], tree.node_count[i]
        tmin = np.minimum(np.minimum(v0[s:s + n], v1[s:s + n]), v2[s:s + n]).min(axis=0)
        tmax = np.maximum(np.maximum(v0[s:s + n], v1[s:s + n]), v2[s:s + n]).max(axis=0)
        assert (tmin >= tree.node_min[i] - 1e-12).all()
        assert (tmax <= tree.node_max[i] + 1e-12).all()


def test_bvh_covers_every_triangle():
    mesh = _composite_mesh()
    v0, e1, e2 = _tri_arrays(mesh)
    tree = build_bvh(v0, e1, e2)
    assert sorted(tree.order.tolist()) == list(range(mesh.num_triangles))
    leaf_total = int(tree.node_count.sum())
    assert leaf_total == mesh.num_triangles


def test_empty_mesh():
    tree = build_bvh(np.zeros((0, 3)), np.zeros((0, 3)), np.zeros((0, 3)))
    stack = np.empty(STACK_DEPTH, dtype=np.int32)
    t, i = bvh_closest_hit(0.0, 0.0, 0.0, 0.0, 0.0, -1.0, np.inf,
                           tree.node_min, tree.node_max, tree.node_left,
                           tree.node_count, np.zeros((0, 3)), np.zeros((0, 3)),
                           np.zeros((0, 3)), stack)
    assert i == -1
