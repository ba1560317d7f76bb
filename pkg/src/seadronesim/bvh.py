"""Bounding-volume hierarchy over triangles, plus a brute-force reference intersector.

The tree is built once in numpy (median split on the widest centroid axis) and
flattened into plain arrays so the numba kernels can traverse it. Inner nodes
store the index of their left child (right child is always left + 1); leaves
store a [start, start + count) range into the *reordered* triangle arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

LEAF_SIZE = 4
STACK_DEPTH = 64
T_EPS = 1e-9  # min parametric distance accepted as a hit


@dataclass
class Bvh:
    node_min: np.ndarray   # (k, 3) float64
    node_max: np.ndarray   # (k, 3) float64
    node_left: np.ndarray  # (k,) int32: inner -> left child, leaf -> tri start
    node_count: np.ndarray  # (k,) int32: 0 -> inner, >0 -> leaf triangle count
    order: np.ndarray      # (m,) int32 triangle permutation applied by the build


def build_bvh(v0: np.ndarray, e1: np.ndarray, e2: np.ndarray) -> Bvh:
    """Build over triangles given as (corner, edge1, edge2), the kernel layout."""
    m = len(v0)
    if m == 0:
        return Bvh(np.zeros((1, 3)), np.zeros((1, 3)),
                   np.zeros(1, dtype=np.int32), np.zeros(1, dtype=np.int32),
                   np.zeros(0, dtype=np.int32))
    v1 = v0 + e1
    v2 = v0 + e2
    tri_min = np.minimum(np.minimum(v0, v1), v2)
    tri_max = np.maximum(np.maximum(v0, v1), v2)
    centroids = (tri_min + tri_max) * 0.5
    order = np.arange(m, dtype=np.int32)

    node_min: list[np.ndarray] = []
    node_max: list[np.ndarray] = []
    node_left: list[int] = []
    node_count: list[int] = []

    def new_node(lo: int, hi: int) -> int:
        idx = len(node_left)
        sel = order[lo:hi]
        node_min.append(tri_min[sel].min(axis=0))
        node_max.append(tri_max[sel].max(axis=0))
        node_left.append(0)
        node_count.append(0)
        return idx

    # iterative build; stack holds (node index, lo, hi) ranges of `order`
    root = new_node(0, m)
    stack = [(root, 0, m)]
    while stack:
        node, lo, hi = stack.pop()
        n = hi - lo
        if n <= LEAF_SIZE:
            node_left[node] = lo
            node_count[node] = n
            continue
        sel = order[lo:hi]
        cmin = centroids[sel].min(axis=0)
        cmax = centroids[sel].max(axis=0)
        axis = int(np.argmax(cmax - cmin))
        if cmax[axis] - cmin[axis] <= 0.0:
            node_left[node] = lo  # all centroids coincide; keep as one leaf
            node_count[node] = n
            continue
        keys = centroids[sel, axis]
        local = np.argsort(keys, kind="stable")
        order[lo:hi] = sel[local]
        mid = lo + n // 2
        left = new_node(lo, mid)
        right = new_node(mid, hi)
        assert right == left + 1
        node_left[node] = left
        stack.append((right, mid, hi))
        stack.append((left, lo, mid))

    return Bvh(np.ascontiguousarray(node_min, dtype=np.float64),
               np.ascontiguousarray(node_max, dtype=np.float64),
               np.asarray(node_left, dtype=np.int32),
               np.asarray(node_count, dtype=np.int32),
               order)


# ---------------------------------------------------------------------------
# numba kernels

@numba.njit(nogil=True, cache=True, inline="always")
def _ray_box(ox, oy, oz, inv_dx, inv_dy, inv_dz, bmin, bmax, tmax):
    """Slab test; returns True when the box overlaps [T_EPS, tmax]."""
    t0 = (bmin[0] - ox) * inv_dx
    t1 = (bmax[0] - ox) * inv_dx
    if t0 > t1:
        t0, t1 = t1, t0
    tn = t0
    tf = t1
    t0 = (bmin[1] - oy) * inv_dy
    t1 = (bmax[1] - oy) * inv_dy
    if t0 > t1:
        t0, t1 = t1, t0
    if t0 > tn:
        tn = t0
    if t1 < tf:
        tf = t1
    t0 = (bmin[2] - oz) * inv_dz
    t1 = (bmax[2] - oz) * inv_dz
    if t0 > t1:
        t0, t1 = t1, t0
    if t0 > tn:
        tn = t0
    if t1 < tf:
        tf = t1
    return tf >= tn and tf >= T_EPS and tn <= tmax


@numba.njit(nogil=True, cache=True, inline="always")
def _ray_triangle(ox, oy, oz, dx, dy, dz, p0, e1, e2):
    """Moller-Trumbore; returns t (or -1.0 when missed)."""
    px = dy * e2[2] - dz * e2[1]
    py = dz * e2[0] - dx * e2[2]
    pz = dx * e2[1] - dy * e2[0]
    det = e1[0] * px + e1[1] * py + e1[2] * pz
    if -1e-13 < det < 1e-13:
        return -1.0
    inv_det = 1.0 / det
    sx = ox - p0[0]
    sy = oy - p0[1]
    sz = oz - p0[2]
    u = (sx * px + sy * py + sz * pz) * inv_det
    if u < 0.0 or u > 1.0:
        return -1.0
    qx = sy * e1[2] - sz * e1[1]
    qy = sz * e1[0] - sx * e1[2]
    qz = sx * e1[1] - sy * e1[0]
    v = (dx * qx + dy * qy + dz * qz) * inv_det
    if v < 0.0 or u + v > 1.0:
        return -1.0
    t = (e2[0] * qx + e2[1] * qy + e2[2] * qz) * inv_det
    if t < T_EPS:
        return -1.0
    return t


@numba.njit(nogil=True, cache=True)
def bvh_closest_hit(ox, oy, oz, dx, dy, dz, tmax,
                    node_min, node_max, node_left, node_count,
                    tri_v0, tri_e1, tri_e2, stack):
    """Nearest triangle hit in (T_EPS, tmax); returns (t, triangle index or -1).

    Strict < comparison, so exact ties keep the first triangle found.
    """
    best_t = tmax
    best_i = -1
    if len(tri_v0) == 0:
        return best_t, best_i
    inv_dx = 1.0 / dx if dx != 0.0 else np.inf
    inv_dy = 1.0 / dy if dy != 0.0 else np.inf
    inv_dz = 1.0 / dz if dz != 0.0 else np.inf
    sp = 0
    stack[sp] = 0
    sp += 1
    while sp > 0:
        sp -= 1
        node = stack[sp]
        if not _ray_box(ox, oy, oz, inv_dx, inv_dy, inv_dz,
                        node_min[node], node_max[node], best_t):
            continue
        count = node_count[node]
        if count > 0:
            start = node_left[node]
            for i in range(start, start + count):
                t = _ray_triangle(ox, oy, oz, dx, dy, dz,
                                  tri_v0[i], tri_e1[i], tri_e2[i])
                if 0.0 < t < best_t:
                    best_t = t
                    best_i = i
        else:
            left = node_left[node]
            stack[sp] = left + 1
            sp += 1
            stack[sp] = left
            sp += 1
    return best_t, best_i


@numba.njit(nogil=True, cache=True)
def bvh_any_hit(ox, oy, oz, dx, dy, dz, tmax,
                node_min, node_max, node_left, node_count,
                tri_v0, tri_e1, tri_e2, stack):
    """True when any triangle blocks the segment (T_EPS, tmax)."""
    if len(tri_v0) == 0:
        return False
    inv_dx = 1.0 / dx if dx != 0.0 else np.inf
    inv_dy = 1.0 / dy if dy != 0.0 else np.inf
    inv_dz = 1.0 / dz if dz != 0.0 else np.inf
    sp = 0
    stack[sp] = 0
    sp += 1
    while sp > 0:
        sp -= 1
        node = stack[sp]
        if not _ray_box(ox, oy, oz, inv_dx, inv_dy, inv_dz,
                        node_min[node], node_max[node], tmax):
            continue
        count = node_count[node]
        if count > 0:
            start = node_left[node]
            for i in range(start, start + count):
                t = _ray_triangle(ox, oy, oz, dx, dy, dz,
                                  tri_v0[i], tri_e1[i], tri_e2[i])
                if 0.0 < t < tmax:
                    return True
        else:
            left = node_left[node]
            stack[sp] = left + 1
            sp += 1
            stack[sp] = left
            sp += 1
    return False


# ---------------------------------------------------------------------------
# Brute-force reference (vectorized over triangles, one ray at a time)

def brute_force_closest(origin, direction, v0, e1, e2, tmax=np.inf):
    """Linear scan over every triangle; returns (t, index or -1).

    Independent of the BVH path: one vectorized Moller-Trumbore over all faces,
    nearest hit by argmin with lowest-index tie-breaking.
    """
    o = np.asarray(origin, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)
    if len(v0) == 0:
        return float(tmax), -1
    p = np.cross(d, e2)
    det = np.einsum("ij,ij->i", e1, p)
    ok = np.abs(det) >= 1e-13
    inv_det = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    s = o - v0
    u = np.einsum("ij,ij->i", s, p) * inv_det
    q = np.cross(s, e1)
    v = (q @ d) * inv_det
    t = np.einsum("ij,ij->i", e2, q) * inv_det
    ok &= (u >= 0.0) & (u <= 1.0) & (v >= 0.0) & (u + v <= 1.0) & (t >= T_EPS) & (t < tmax)
    if not ok.any():
        return float(tmax), -1
    ts = np.where(ok, t, np.inf)
    idx = int(np.argmin(ts))
    return float(ts[idx]), idx
