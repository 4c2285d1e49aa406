"""2D convex hulls and hull perimeters of planar cross-sections.

Circumferences default to the hull perimeter of the projected section:
a physical tape measure spans concavities. Raw loop length stays
available through the annotation config.
"""
from __future__ import annotations

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import DegenerateSection
from .mesh import CrossSection


def convex_hull_2d(points: np.ndarray) -> np.ndarray:
    """Indices of the convex hull of 2D points, counterclockwise.

    Raises DegenerateSection when the points are (near-)collinear.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be (n, 2)")
    if len(pts) < 3:
        raise DegenerateSection("fewer than 3 points")
    try:
        hull = ConvexHull(pts)
    except QhullError as exc:
        raise DegenerateSection("projected points are collinear") from exc
    return hull.vertices.astype(np.int64)


def polygon_perimeter_2d(points: np.ndarray) -> float:
    pts = np.asarray(points, dtype=np.float64)
    return float(np.linalg.norm(np.diff(np.vstack([pts, pts[:1]]), axis=0), axis=1).sum())


def hull_perimeter_2d(points: np.ndarray) -> float:
    idx = convex_hull_2d(points)
    return polygon_perimeter_2d(np.asarray(points, dtype=np.float64)[idx])


def project_to_plane(points: np.ndarray, plane) -> np.ndarray:
    """Project 3D points onto the plane's deterministic 2D basis."""
    u, v = plane.basis()
    pts = np.asarray(points, dtype=np.float64)
    return np.stack([pts @ u, pts @ v], axis=1)


def convex_hull_perimeter(cs: CrossSection) -> float:
    """Perimeter of the 2D convex hull of the projected loop, meters."""
    return hull_perimeter_2d(project_to_plane(cs.points, cs.plane))


def loop_perimeter(cs: CrossSection) -> float:
    """Raw closed-polyline length including the closing segment, meters."""
    p = cs.points
    return float(np.linalg.norm(np.diff(np.vstack([p, p[:1]]), axis=0), axis=1).sum())
