"""Ray-triangle intersection (Moller-Trumbore), single rays and ray bundles.

Edge and vertex grazes are accepted by both incident triangles with a
small inclusive barycentric tolerance; the nearest-hit tie then breaks
deterministically to the smallest triangle id, so a grazing ray yields
exactly one hit.
"""
from __future__ import annotations

import numpy as np

from .mesh import TriangleMesh

BARY_EPS = 1e-10
T_MIN = 1e-12


def intersect_rays_triangles(
    origins: np.ndarray,
    directions: np.ndarray,
    v0: np.ndarray,
    v1: np.ndarray,
    v2: np.ndarray,
) -> np.ndarray:
    """Hit distances for every ray-triangle pair.

    origins/directions: (r, 3). v0/v1/v2: (t, 3). Returns (r, t) float64
    with np.inf where there is no hit with distance > T_MIN.
    """
    o = origins[:, None, :]
    d = directions[:, None, :]
    e1 = (v1 - v0)[None, :, :]
    e2 = (v2 - v0)[None, :, :]
    pvec = np.cross(d, e2)
    det = np.sum(e1 * pvec, axis=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_det = 1.0 / det
        tvec = o - v0[None, :, :]
        u = np.sum(tvec * pvec, axis=2) * inv_det
        qvec = np.cross(tvec, e1)
        v = np.sum(d * qvec, axis=2) * inv_det
        t = np.sum(e2 * qvec, axis=2) * inv_det
        ok = (
            (np.abs(det) > 1e-300)
            & (u >= -BARY_EPS)
            & (v >= -BARY_EPS)
            & (u + v <= 1.0 + BARY_EPS)
            & (t > T_MIN)
            & np.isfinite(t)
        )
    return np.where(ok, t, np.inf)


def intersect_pairs(
    origins: np.ndarray,
    directions: np.ndarray,
    v0: np.ndarray,
    v1: np.ndarray,
    v2: np.ndarray,
) -> np.ndarray:
    """Hit distances for aligned ray/triangle pairs; all inputs (p, 3).

    Returns (p,) float64 with np.inf where pair p does not hit.
    """
    e1 = v1 - v0
    e2 = v2 - v0
    pvec = np.cross(directions, e2)
    det = np.sum(e1 * pvec, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_det = 1.0 / det
        tvec = origins - v0
        u = np.sum(tvec * pvec, axis=1) * inv_det
        qvec = np.cross(tvec, e1)
        v = np.sum(directions * qvec, axis=1) * inv_det
        t = np.sum(e2 * qvec, axis=1) * inv_det
        ok = (
            (np.abs(det) > 1e-300)
            & (u >= -BARY_EPS)
            & (v >= -BARY_EPS)
            & (u + v <= 1.0 + BARY_EPS)
            & (t > T_MIN)
            & np.isfinite(t)
        )
    return np.where(ok, t, np.inf)


def raycast(mesh: TriangleMesh, origin, direction):
    """Nearest mesh intersection along a ray, or None on a miss.

    Returns (point, distance, triangle_id); ties on distance break to the
    smallest triangle id.
    """
    origin = np.asarray(origin, dtype=np.float64).reshape(1, 3)
    direction = np.asarray(direction, dtype=np.float64).reshape(1, 3)
    a, b, c = mesh.triangle_corners()
    t = intersect_rays_triangles(origin, direction, a, b, c)[0]
    tmin = t.min()
    if not np.isfinite(tmin):
        return None
    tri = int(np.argmax(t == tmin))
    point = origin[0] + tmin * direction[0]
    return point, float(tmin), tri
