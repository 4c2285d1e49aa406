"""Triangle mesh, plane and cross-section types plus basic mesh queries.

Units are meters everywhere; millimeters appear only at report/CSV
boundaries.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BodykitError

AXES = {"X": 0, "Y": 1, "Z": 2}

REQUIRED_JOINTS = (
    "head",
    "neck",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "upper_spine",
    "mid_spine",
    "pelvis",
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
    "left_ankle",
    "right_ankle",
)


@dataclass
class TriangleMesh:
    """Indexed triangle surface.

    vertices: (n, 3) float64, meters.
    triangles: (m, 3) int64 vertex indices.
    normals: optional (n, 3) per-vertex normals.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    normals: np.ndarray | None = None

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=np.float64)
        self.triangles = np.ascontiguousarray(self.triangles, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise BodykitError("vertices must be (n, 3)")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise BodykitError("triangles must be (m, 3)")
        if len(self.triangles) and self.triangles.max() >= len(self.vertices):
            raise BodykitError("triangle index out of range")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def triangle_corners(self):
        """Returns the (m, 3) corner positions as three (m, 3) arrays."""
        v = self.vertices
        t = self.triangles
        return v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]

    def face_normals(self) -> np.ndarray:
        a, b, c = self.triangle_corners()
        n = np.cross(b - a, c - a)
        norm = np.linalg.norm(n, axis=1, keepdims=True)
        norm[norm == 0] = 1.0
        return n / norm

    def triangle_areas(self) -> np.ndarray:
        a, b, c = self.triangle_corners()
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    def is_watertight(self) -> bool:
        """True when every edge is shared by exactly two triangles."""
        return len(boundary_or_nonmanifold_edges(self)) == 0

    def transformed(self, rotation=None, translation=None, scale=None) -> "TriangleMesh":
        """Returns a rigidly transformed / uniformly scaled copy."""
        v = self.vertices
        if scale is not None:
            v = v * float(scale)
        if rotation is not None:
            v = v @ np.asarray(rotation, dtype=np.float64).T
        if translation is not None:
            v = v + np.asarray(translation, dtype=np.float64)
        return TriangleMesh(v, self.triangles.copy())


def edge_use_counts(mesh: TriangleMesh):
    """Canonical (sorted) edges of all triangles and their use counts."""
    t = mesh.triangles
    e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    e = np.sort(e, axis=1)
    edges, counts = np.unique(e, axis=0, return_counts=True)
    return edges, counts


def boundary_or_nonmanifold_edges(mesh: TriangleMesh) -> np.ndarray:
    edges, counts = edge_use_counts(mesh)
    return edges[counts != 2]


def axis_extent(mesh: TriangleMesh, axis) -> tuple[float, float]:
    """Exact (min, max) vertex coordinate along an axis ('X'/'Y'/'Z' or 0/1/2)."""
    if len(mesh.vertices) == 0:
        raise BodykitError("axis_extent of empty mesh")
    i = AXES[axis] if isinstance(axis, str) else int(axis)
    col = mesh.vertices[:, i]
    return float(col.min()), float(col.max())


def direction_extent(mesh: TriangleMesh, direction) -> tuple[float, float]:
    """(min, max) of vertex projections onto an arbitrary unit direction."""
    d = np.asarray(direction, dtype=np.float64)
    proj = mesh.vertices @ d
    return float(proj.min()), float(proj.max())


def concatenate(meshes) -> TriangleMesh:
    """Disjoint union of meshes (indices offset, no welding)."""
    verts = []
    tris = []
    offset = 0
    for m in meshes:
        verts.append(m.vertices)
        tris.append(m.triangles + offset)
        offset += len(m.vertices)
    return TriangleMesh(np.concatenate(verts), np.concatenate(tris))


def connected_components(mesh: TriangleMesh) -> np.ndarray:
    """Per-triangle component labels (triangles joined by shared vertices)."""
    import scipy.sparse as sp
    from scipy.sparse.csgraph import connected_components as _cc

    t = mesh.triangles
    n = mesh.n_vertices
    rows = np.concatenate([t[:, 0], t[:, 1], t[:, 2]])
    cols = np.concatenate([t[:, 1], t[:, 2], t[:, 0]])
    g = sp.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    _, vlabel = _cc(g, directed=False)
    return vlabel[t[:, 0]]


@dataclass
class Plane:
    """Plane {x : normal . x = offset} with a unit normal."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        self.normal = np.asarray(self.normal, dtype=np.float64)
        n = np.linalg.norm(self.normal)
        if abs(n - 1.0) > 1e-9:
            raise BodykitError(f"plane normal must be unit length, got |n| = {n}")
        self.offset = float(self.offset)

    @classmethod
    def from_point(cls, normal, point) -> "Plane":
        normal = np.asarray(normal, dtype=np.float64)
        normal = normal / np.linalg.norm(normal)
        return cls(normal, float(normal @ np.asarray(point, dtype=np.float64)))

    def signed_distance(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) @ self.normal - self.offset

    def basis(self):
        """Deterministic orthonormal in-plane basis (u, v)."""
        n = self.normal
        k = int(np.argmin(np.abs(n)))
        a = np.zeros(3)
        a[k] = 1.0
        u = np.cross(a, n)
        u /= np.linalg.norm(u)
        v = np.cross(n, u)
        return u, v


@dataclass
class CrossSection:
    """Closed planar polyline; the first vertex implicitly follows the last."""

    points: np.ndarray
    plane: Plane

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[1] != 3 or len(self.points) < 3:
            raise BodykitError("cross-section needs >= 3 points of shape (k, 3)")

    @property
    def centroid(self) -> np.ndarray:
        return self.points.mean(axis=0)


@dataclass
class Skeleton:
    """Named joint positions in meters."""

    joints: dict = field(default_factory=dict)

    def __post_init__(self):
        self.joints = {k: np.asarray(v, dtype=np.float64) for k, v in self.joints.items()}

    def __getitem__(self, name: str) -> np.ndarray:
        from .errors import MissingJoint

        if name not in self.joints:
            raise MissingJoint(name)
        return self.joints[name]

    def __contains__(self, name: str) -> bool:
        return name in self.joints

    def missing_required(self):
        return [j for j in REQUIRED_JOINTS if j not in self.joints]

    def transformed(self, rotation=None, translation=None, scale=None) -> "Skeleton":
        out = {}
        for k, p in self.joints.items():
            q = p.copy()
            if scale is not None:
                q = q * float(scale)
            if rotation is not None:
                q = np.asarray(rotation, dtype=np.float64) @ q
            if translation is not None:
                q = q + np.asarray(translation, dtype=np.float64)
            out[k] = q
        return Skeleton(out)


def rotation_about_y(angle_rad: float) -> np.ndarray:
    c, s = np.cos(angle_rad), np.sin(angle_rad)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def make_box(size=(1.0, 1.0, 1.0), center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Axis-aligned closed box, 12 triangles."""
    sx, sy, sz = [s / 2.0 for s in size]
    cx, cy, cz = center
    corners = np.array(
        [
            [-sx, -sy, -sz],
            [+sx, -sy, -sz],
            [+sx, +sy, -sz],
            [-sx, +sy, -sz],
            [-sx, -sy, +sz],
            [+sx, -sy, +sz],
            [+sx, +sy, +sz],
            [-sx, +sy, +sz],
        ]
    ) + np.array([cx, cy, cz])
    quads = [
        (0, 3, 2, 1),  # -z
        (4, 5, 6, 7),  # +z
        (0, 1, 5, 4),  # -y
        (2, 3, 7, 6),  # +y
        (1, 2, 6, 5),  # +x
        (0, 4, 7, 3),  # -x
    ]
    tris = []
    for a, b, c, d in quads:
        tris.append((a, b, c))
        tris.append((a, c, d))
    return TriangleMesh(corners, np.array(tris))


def make_cylinder(radius=0.1, height=1.0, segments=64, center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Closed cylinder with axis Y and flat fan caps."""
    theta = 2.0 * np.pi * np.arange(segments) / segments
    ring = np.stack([radius * np.cos(theta), np.zeros(segments), radius * np.sin(theta)], axis=1)
    lo = ring + np.array([0.0, -height / 2.0, 0.0])
    hi = ring + np.array([0.0, +height / 2.0, 0.0])
    verts = [lo, hi, np.array([[0.0, -height / 2.0, 0.0], [0.0, +height / 2.0, 0.0]])]
    verts = np.concatenate(verts) + np.asarray(center, dtype=np.float64)
    clo, chi = 2 * segments, 2 * segments + 1
    tris = []
    for i in range(segments):
        j = (i + 1) % segments
        # side quad, outward winding
        tris.append((i, segments + j, j))
        tris.append((i, segments + i, segments + j))
        tris.append((clo, i, j))  # bottom cap faces -y
        tris.append((chi, segments + j, segments + i))  # top cap faces +y
    return TriangleMesh(verts, np.array(tris))
