"""Triangle meshes, Wavefront OBJ loading, rigid transforms, and procedural primitives."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import MeshError

log = logging.getLogger(__name__)

# Faces with less area than this (in square meters) are dropped at load time.
DEGENERATE_AREA_EPS = 1e-12


@dataclass
class TriangleMesh:
    """Indexed triangle soup with a per-face material id.

    vertices: (n, 3) float64 positions in meters.
    triangles: (m, 3) int32 vertex indices.
    material_ids: (m,) int32, indexes whatever material table the scene provides.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    material_ids: np.ndarray = None
    degenerate_dropped: int = 0

    def __post_init__(self) -> None:
        self.vertices = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        self.triangles = np.ascontiguousarray(np.asarray(self.triangles, dtype=np.int32))
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise MeshError(f"vertices must be (n, 3), got {self.vertices.shape}")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise MeshError(f"triangles must be (m, 3), got {self.triangles.shape}")
        if self.material_ids is None:
            self.material_ids = np.zeros(len(self.triangles), dtype=np.int32)
        else:
            self.material_ids = np.asarray(self.material_ids, dtype=np.int32)
        if len(self.material_ids) != len(self.triangles):
            raise MeshError("material_ids length must match triangle count")
        if len(self.triangles) and self.triangles.max(initial=-1) >= len(self.vertices):
            raise MeshError("triangle index out of range")
        if len(self.triangles) and self.triangles.min(initial=0) < 0:
            raise MeshError("negative triangle index")
        if not np.all(np.isfinite(self.vertices)):
            raise MeshError("non-finite vertex coordinates")

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_triangles(self) -> int:
        return len(self.triangles)

    def corners(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-face corner positions as three (m, 3) arrays."""
        v = self.vertices
        t = self.triangles
        return v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]

    def face_areas(self) -> np.ndarray:
        a, b, c = self.corners()
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    def surface_area(self) -> float:
        return float(self.face_areas().sum())

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Axis-aligned bounding box (min, max). Empty mesh raises."""
        if self.num_vertices == 0:
            raise MeshError("empty mesh has no bounds")
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def transformed(self, rotation_wxyz=None, translation=None) -> "TriangleMesh":
        """A copy with vertices rigidly transformed (rotate about origin, then translate)."""
        v = self.vertices
        if rotation_wxyz is not None:
            v = v @ quat_to_matrix(np.asarray(rotation_wxyz, dtype=np.float64)).T
        if translation is not None:
            v = v + np.asarray(translation, dtype=np.float64)
        return TriangleMesh(v, self.triangles.copy(), self.material_ids.copy(),
                            self.degenerate_dropped)

    def drop_degenerate(self) -> "TriangleMesh":
        """A copy without near-zero-area faces; records how many were removed."""
        keep = self.face_areas() > DEGENERATE_AREA_EPS
        dropped = int((~keep).sum())
        return TriangleMesh(self.vertices, self.triangles[keep], self.material_ids[keep],
                            self.degenerate_dropped + dropped)


def load_mesh(path) -> TriangleMesh:
    """Load a Wavefront OBJ file (positions and faces; normals/uvs are ignored).

    Polygonal faces are fan-triangulated. Faces switching material via ``usemtl``
    get increasing material ids in first-use order. Degenerate faces (area below
    ``DEGENERATE_AREA_EPS``) are dropped with a warning.
    """
    path = Path(path)
    if not path.is_file():
        raise MeshError(f"mesh file not found: {path}")
    vertices: list[tuple[float, float, float]] = []
    faces: list[tuple[int, int, int]] = []
    face_mats: list[int] = []
    mat_index: dict[str, int] = {}
    current_mat = 0

    def vertex_ref(token: str, lineno: int) -> int:
        idx_str = token.split("/")[0]
        try:
            idx = int(idx_str)
        except ValueError:
            raise MeshError(f"{path}:{lineno}: bad face vertex reference {token!r}") from None
        if idx < 0:
            idx = len(vertices) + idx
        else:
            idx -= 1
        if not 0 <= idx < len(vertices):
            raise MeshError(f"{path}:{lineno}: face references vertex {token!r} "
                            f"but only {len(vertices)} vertices are defined")
        return idx

    with path.open("r", encoding="utf-8", errors="replace") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            tag = parts[0]
            if tag == "v":
                if len(parts) < 4:
                    raise MeshError(f"{path}:{lineno}: vertex line needs 3 coordinates")
                try:
                    vertices.append((float(parts[1]), float(parts[2]), float(parts[3])))
                except ValueError:
                    raise MeshError(f"{path}:{lineno}: non-numeric vertex coordinate") from None
            elif tag == "f":
                if len(parts) < 4:
                    raise MeshError(f"{path}:{lineno}: face needs at least 3 vertices")
                idxs = [vertex_ref(tok, lineno) for tok in parts[1:]]
                for k in range(1, len(idxs) - 1):
                    faces.append((idxs[0], idxs[k], idxs[k + 1]))
                    face_mats.append(current_mat)
            elif tag == "usemtl":
                name = parts[1] if len(parts) > 1 else ""
                current_mat = mat_index.setdefault(name, len(mat_index))
            # vn / vt / o / g / s / mtllib are irrelevant here

    if not faces:
        raise MeshError(f"{path}: no faces found")
    mesh = TriangleMesh(np.array(vertices, dtype=np.float64),
                        np.array(faces, dtype=np.int32),
                        np.array(face_mats, dtype=np.int32))
    mesh = mesh.drop_degenerate()
    if mesh.num_triangles == 0:
        raise MeshError(f"{path}: all {len(faces)} faces are degenerate")
    if mesh.degenerate_dropped:
        log.warning("%s: dropped %d degenerate face(s)", path, mesh.degenerate_dropped)
    return mesh


def save_obj(mesh: TriangleMesh, path) -> None:
    """Write a mesh back out as a minimal OBJ (positions + faces)."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for v in mesh.vertices:
            fh.write(f"v {float(v[0])!r} {float(v[1])!r} {float(v[2])!r}\n")
        for t in mesh.triangles:
            fh.write(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")


# ---------------------------------------------------------------------------
# Quaternions (w, x, y, z convention; identity is (1, 0, 0, 0))

def quat_identity() -> np.ndarray:
    return np.array([1.0, 0.0, 0.0, 0.0])


def quat_normalize(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    n = np.linalg.norm(q)
    if n == 0:
        raise ValueError("zero quaternion")
    q = q / n
    return -q if q[0] < 0 else q  # canonical hemisphere, w >= 0


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = quat_normalize(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_from_matrix(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    t = np.trace(m)
    if t > 0:
        s = math.sqrt(t + 1.0) * 2
        q = np.array([0.25 * s, (m[2, 1] - m[1, 2]) / s,
                      (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s])
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2
        q = np.array([(m[2, 1] - m[1, 2]) / s, 0.25 * s,
                      (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s])
    elif m[1, 1] > m[2, 2]:
        s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2
        q = np.array([(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s,
                      0.25 * s, (m[1, 2] + m[2, 1]) / s])
    else:
        s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2
        q = np.array([(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s,
                      (m[1, 2] + m[2, 1]) / s, 0.25 * s])
    return quat_normalize(q)


def quat_from_yaw_pitch_roll(yaw: float, pitch: float, roll: float) -> np.ndarray:
    """Intrinsic z-y-x rotation (yaw about z, then pitch about y, then roll about x), radians."""
    cy, sy = math.cos(yaw / 2), math.sin(yaw / 2)
    cp, sp = math.cos(pitch / 2), math.sin(pitch / 2)
    cr, sr = math.cos(roll / 2), math.sin(roll / 2)
    return quat_normalize(np.array([
        cy * cp * cr + sy * sp * sr,
        cy * cp * sr - sy * sp * cr,
        cy * sp * cr + sy * cp * sr,
        sy * cp * cr - cy * sp * sr,
    ]))


# ---------------------------------------------------------------------------
# Procedural primitives (distractor library and test fixtures)

def make_box(size=(1.0, 1.0, 1.0), material_id: int = 0) -> TriangleMesh:
    """Axis-aligned box centered at the origin."""
    sx, sy, sz = (float(s) / 2 for s in size)
    v = np.array([[x, y, z] for x in (-sx, sx) for y in (-sy, sy) for z in (-sz, sz)])
    # indices: bit2 = x, bit1 = y, bit0 = z
    quads = [
        (0, 1, 3, 2),  # -x
        (4, 6, 7, 5),  # +x
        (0, 4, 5, 1),  # -y
        (2, 3, 7, 6),  # +y
        (0, 2, 6, 4),  # -z
        (1, 5, 7, 3),  # +z
    ]
    tris = []
    for a, b, c, d in quads:
        tris.append((a, b, c))
        tris.append((a, c, d))
    m = np.full(len(tris), material_id, dtype=np.int32)
    return TriangleMesh(v, np.array(tris, dtype=np.int32), m)


def make_cone(radius: float = 1.0, height: float = 1.0, segments: int = 24,
              material_id: int = 0) -> TriangleMesh:
    """Cone with base disc on z=0 and apex at z=height ("hill" shape)."""
    if segments < 3:
        raise ValueError("cone needs at least 3 segments")
    ang = 2 * np.pi * np.arange(segments) / segments
    ring = np.stack([radius * np.cos(ang), radius * np.sin(ang), np.zeros(segments)], axis=1)
    v = np.vstack([ring, [[0, 0, float(height)]], [[0, 0, 0]]])
    apex, center = segments, segments + 1
    tris = []
    for i in range(segments):
        j = (i + 1) % segments
        tris.append((i, j, apex))
        tris.append((j, i, center))
    m = np.full(len(tris), material_id, dtype=np.int32)
    return TriangleMesh(v, np.array(tris, dtype=np.int32), m)


def make_uv_sphere(radius: float = 1.0, rings: int = 16, segments: int = 32,
                   material_id: int = 0) -> TriangleMesh:
    """Latitude/longitude sphere centered at the origin."""
    if rings < 2 or segments < 3:
        raise ValueError("sphere needs rings >= 2 and segments >= 3")
    verts = [(0.0, 0.0, radius)]
    for r in range(1, rings):
        theta = np.pi * r / rings
        for s in range(segments):
            phi = 2 * np.pi * s / segments
            verts.append((radius * math.sin(theta) * math.cos(phi),
                          radius * math.sin(theta) * math.sin(phi),
                          radius * math.cos(theta)))
    verts.append((0.0, 0.0, -radius))
    top, bottom = 0, len(verts) - 1

    def ring_vert(r: int, s: int) -> int:
        return 1 + (r - 1) * segments + (s % segments)

    tris = []
    for s in range(segments):
        tris.append((top, ring_vert(1, s), ring_vert(1, s + 1)))
    for r in range(1, rings - 1):
        for s in range(segments):
            a, b = ring_vert(r, s), ring_vert(r, s + 1)
            c, d = ring_vert(r + 1, s), ring_vert(r + 1, s + 1)
            tris.append((a, c, d))
            tris.append((a, d, b))
    for s in range(segments):
        tris.append((bottom, ring_vert(rings - 1, s + 1), ring_vert(rings - 1, s)))
    m = np.full(len(tris), material_id, dtype=np.int32)
    return TriangleMesh(np.array(verts), np.array(tris, dtype=np.int32), m)


def make_rov(scale: float = 1.0) -> TriangleMesh:
    """Small ROV-like assembly: flat hull, buoyancy floats, and four thruster pods.

    Material ids: 0 = hull, 1 = floats, 2 = thrusters. Roughly 0.45 x 0.34 x 0.25 m
    at scale 1, matching a small inspection-class vehicle footprint.
    """
    parts: list[TriangleMesh] = []

    def add(mesh: TriangleMesh, offset) -> None:
        parts.append(mesh.transformed(translation=np.array(offset) * scale))

    hull = make_box((0.45, 0.30, 0.12), material_id=0)
    hull.vertices *= scale
    add(hull, (0.0, 0.0, -0.02))
    for sy in (-1, 1):
        f = make_box((0.42, 0.08, 0.09), material_id=1)
        f.vertices *= scale
        add(f, (0.0, sy * 0.13, 0.09))
    for sx in (-1, 1):
        for sy in (-1, 1):
            pod = make_cone(radius=0.035, height=0.10, segments=10, material_id=2)
            pod.vertices *= scale
            add(pod, (sx * 0.16, sy * 0.10, -0.12))
    return merge_meshes(parts)


def merge_meshes(meshes: list[TriangleMesh]) -> TriangleMesh:
    """Concatenate meshes into one, offsetting indices; material ids pass through."""
    if not meshes:
        raise MeshError("cannot merge zero meshes")
    verts, tris, mats = [], [], []
    offset = 0
    for m in meshes:
        verts.append(m.vertices)
        tris.append(m.triangles + offset)
        mats.append(m.material_ids)
        offset += m.num_vertices
    return TriangleMesh(np.vstack(verts), np.vstack(tris), np.concatenate(mats))


_BUILTIN_MAKERS = {
    "box": lambda p: make_box(size=p.get("size", (1.0, 1.0, 1.0))),
    "cone": lambda p: make_cone(radius=p.get("radius", 1.0), height=p.get("height", 1.0),
                                segments=int(p.get("segments", 24))),
    "sphere": lambda p: make_uv_sphere(radius=p.get("radius", 1.0),
                                       rings=int(p.get("rings", 16)),
                                       segments=int(p.get("segments", 32))),
    "rov": lambda p: make_rov(scale=p.get("scale", 1.0)),
}


def builtin_mesh(name: str, params: dict | None = None) -> TriangleMesh:
    """Procedural mesh by name: box, cone, sphere, or rov."""
    try:
        maker = _BUILTIN_MAKERS[name]
    except KeyError:
        raise MeshError(f"unknown builtin mesh {name!r}; "
                        f"choices: {sorted(_BUILTIN_MAKERS)}") from None
    return maker(params or {})
