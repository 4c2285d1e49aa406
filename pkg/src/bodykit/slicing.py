"""Plane-mesh cross-sections.

Two paths share the same segment extraction:

* slice_mesh: ordered closed polylines (CrossSection) for a single plane.
* YLevelScanner: repeated horizontal cuts for the mesh-signature scans,
  returning per-loop stats (count, centroid, perimeters) without the cost
  of building CrossSection objects.

Segments are chained by edge identity: both triangles sharing a crossed
edge compute the same canonical intersection point, so loop endpoints
match exactly and unmatched ends surface as NonManifoldEdge instead of
silently producing open polylines. In a valid section every edge node
has degree exactly two, so loops are recovered by a single linear walk.
"""
from __future__ import annotations

import numpy as np

from .errors import NonManifoldEdge
from .hull import hull_perimeter_2d
from .mesh import CrossSection, Plane, TriangleMesh

# Vertices closer to the plane than this are treated as lying on it and are
# nudged to the positive side, making tangent planes deterministic.
ON_PLANE_EPS = 1e-12
PERTURB = 1e-9


def _perturbed(d: np.ndarray) -> np.ndarray:
    return np.where(np.abs(d) <= ON_PLANE_EPS, PERTURB, d)


def _crossed_edges(tri_idx: np.ndarray, d: np.ndarray):
    """For every triangle crossing the level set d = 0, its two crossed
    edges as (odd, a) and (odd, b) global vertex-index pairs."""
    s = d[tri_idx] > 0.0
    ssum = s.sum(axis=1)
    crossed = (ssum == 1) | (ssum == 2)
    if not crossed.any():
        z = np.empty(0, dtype=np.int64)
        return z, z, z
    tc = tri_idx[crossed]
    sc = s[crossed]
    odd_true = (ssum[crossed] == 1)[:, None]
    odd_local = np.argmax(sc == odd_true, axis=1)
    rows = np.arange(len(tc))
    o = tc[rows, odd_local]
    a = tc[rows, (odd_local + 1) % 3]
    b = tc[rows, (odd_local + 2) % 3]
    return o, a, b


def _edge_keys(i, j, n_verts):
    return np.minimum(i, j) * n_verts + np.maximum(i, j)


def _edge_points(i, j, d, verts):
    lo = np.minimum(i, j)
    hi = np.maximum(i, j)
    dl = d[lo]
    t = dl / (dl - d[hi])
    return verts[lo] + t[:, None] * (verts[hi] - verts[lo])


def _decode_edge(key: int, n_verts: int) -> tuple[int, int]:
    return int(key // n_verts), int(key % n_verts)


def _node_ids(key_a, key_b, n_verts):
    """Compact node ids for edge keys; every node must have degree 2."""
    all_keys = np.concatenate([key_a, key_b])
    keys, inverse = np.unique(all_keys, return_inverse=True)
    counts = np.bincount(inverse)
    bad = np.nonzero(counts != 2)[0]
    if len(bad):
        k = int(keys[bad[0]])
        raise NonManifoldEdge(_decode_edge(k, n_verts), counts[bad[0]])
    m = len(key_a)
    return keys, inverse[:m], inverse[m:]


def _walk_loops(na: np.ndarray, nb: np.ndarray, n_nodes: int) -> list[np.ndarray]:
    """Ordered node-id cycles of the 2-regular section graph."""
    flat = np.empty(2 * len(na), dtype=np.int64)
    flat[0::2] = na
    flat[1::2] = nb
    order = np.argsort(flat, kind="stable")
    incident = order // 2  # two segments per node, row-major (n_nodes, 2)
    # plain lists: the walk is scalar-heavy and python ints are much
    # cheaper than numpy scalar indexing here
    ea = na.tolist()
    eb = nb.tolist()
    i0 = incident[0::2].tolist()
    i1 = incident[1::2].tolist()
    visited = bytearray(len(ea))
    loops = []
    for start in range(len(ea)):
        if visited[start]:
            continue
        nodes = []
        seg = start
        node = ea[start]
        while not visited[seg]:
            visited[seg] = 1
            nodes.append(node)
            a = ea[seg]
            node = eb[seg] if node == a else a
            s0 = i0[node]
            s1 = i1[node]
            seg = s1 if seg == s0 else s0
        loops.append(np.asarray(nodes, dtype=np.int64))
    return loops


def slice_mesh(mesh: TriangleMesh, plane: Plane) -> list[CrossSection]:
    """All closed intersection loops of a plane with a mesh.

    Loops are returned sorted by centroid (x, y, z). Returns [] when the
    plane misses the mesh; raises NonManifoldEdge when an intersected edge
    is not shared by exactly two triangles.
    """
    if mesh.n_triangles == 0:
        return []
    d = _perturbed(plane.signed_distance(mesh.vertices))
    o, a, b = _crossed_edges(mesh.triangles, d)
    if len(o) == 0:
        return []
    key_a = _edge_keys(o, a, mesh.n_vertices)
    key_b = _edge_keys(o, b, mesh.n_vertices)
    keys, na, nb = _node_ids(key_a, key_b, mesh.n_vertices)
    node_pts = np.empty((len(keys), 3))
    node_pts[na] = _edge_points(o, a, d, mesh.vertices)
    node_pts[nb] = _edge_points(o, b, d, mesh.vertices)
    sections = [
        CrossSection(node_pts[nodes], plane)
        for nodes in _walk_loops(na, nb, len(keys))
        if len(nodes) >= 3
    ]
    sections.sort(key=lambda cs: tuple(cs.centroid))
    return sections


class LevelLoops:
    """Per-loop stats of one horizontal cross-section level."""

    def __init__(self, node_pts: np.ndarray, loops: list[np.ndarray]):
        self._pts = node_pts
        self._loops = loops
        self.count = len(loops)
        self.centroids = np.stack([node_pts[n].mean(axis=0) for n in loops])

    def points(self, i: int) -> np.ndarray:
        return self._pts[self._loops[i]]

    def raw_perimeter(self, i: int) -> float:
        p = self.points(i)
        return float(np.linalg.norm(np.diff(np.vstack([p, p[:1]]), axis=0), axis=1).sum())

    def hull_perimeter(self, i: int) -> float:
        return hull_perimeter_2d(self.points(i)[:, [0, 2]])


class YLevelScanner:
    """Fast repeated horizontal (Y-normal) cross-section stats.

    Precomputes per-triangle Y intervals so each level touches only the
    triangles actually crossing it. Geometry is skipped when only the
    loop count is needed (axilla / crotch detection).
    """

    def __init__(self, mesh: TriangleMesh, y_range: tuple[float, float] | None = None):
        self.n_verts = mesh.n_vertices
        self.verts = mesh.vertices
        self.vy = np.ascontiguousarray(mesh.vertices[:, 1])
        tris = mesh.triangles
        ty = self.vy[tris]
        if y_range is not None:
            keep = (ty.max(axis=1) >= y_range[0]) & (ty.min(axis=1) <= y_range[1])
            tris = tris[keep]
            ty = ty[keep]
        self.tris = tris
        self.tri_ymin = ty.min(axis=1)
        self.tri_ymax = ty.max(axis=1)

    def _cut(self, y: float):
        # the margin keeps the filter consistent with the on-plane
        # perturbation: a vertex within ON_PLANE_EPS of the level counts as
        # lying above it, so triangles ending exactly at the level may cross
        cand = (self.tri_ymin <= y) & (self.tri_ymax >= y - 2.0 * ON_PLANE_EPS)
        if not cand.any():
            return None
        d = _perturbed(self.vy - y)
        o, a, b = _crossed_edges(self.tris[cand], d)
        if len(o) == 0:
            return None
        key_a = _edge_keys(o, a, self.n_verts)
        key_b = _edge_keys(o, b, self.n_verts)
        keys, na, nb = _node_ids(key_a, key_b, self.n_verts)
        return d, o, a, b, keys, na, nb

    def count_at(self, y: float) -> int:
        cut = self._cut(y)
        if cut is None:
            return 0
        _, _, _, _, keys, na, nb = cut
        return len(_walk_loops(na, nb, len(keys)))

    def loops_at(self, y: float) -> LevelLoops | None:
        cut = self._cut(y)
        if cut is None:
            return None
        d, o, a, b, keys, na, nb = cut
        node_pts = np.empty((len(keys), 3))
        node_pts[na] = _edge_points(o, a, d, self.verts)
        node_pts[nb] = _edge_points(o, b, d, self.verts)
        return LevelLoops(node_pts, _walk_loops(na, nb, len(keys)))
