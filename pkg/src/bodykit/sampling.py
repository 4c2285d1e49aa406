"""Point-cloud subsampling and the training-time normalizations."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCloud, TooFewPoints, ZeroVariance


def farthest_point_sample(cloud: np.ndarray, n: int, seed=None, jobs: int = 1) -> np.ndarray:
    """Greedy farthest point sampling; returns n indices in selection order.

    Starts from the point nearest the cloud centroid and repeatedly adds
    the point with the largest distance to the already-selected set. Ties
    break to the lowest index, which makes the result deterministic; the
    seed parameter is accepted for API symmetry but never consulted.
    jobs > 1 parallelizes the distance updates in fixed chunks, which
    cannot change the output.
    """
    pts = np.asarray(cloud, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError("cloud must be (n, 3)")
    count = len(pts)
    if n < 1 or n > count:
        raise TooFewPoints(f"requested {n} samples from {count} points")

    centroid = pts.mean(axis=0)
    start = int(np.argmin(np.linalg.norm(pts - centroid, axis=1)))
    chosen = np.empty(n, dtype=np.int64)
    chosen[0] = start
    if n == 1:
        return chosen

    mindist = np.linalg.norm(pts - pts[start], axis=1)
    if jobs > 1:
        bounds = np.linspace(0, count, jobs + 1).astype(np.int64)
        pool = ThreadPoolExecutor(max_workers=jobs)

        def update(p):
            def task(lo, hi):
                np.minimum(
                    mindist[lo:hi],
                    np.linalg.norm(pts[lo:hi] - p, axis=1),
                    out=mindist[lo:hi],
                )

            list(pool.map(lambda b: task(*b), zip(bounds[:-1], bounds[1:])))

    else:
        pool = None

        def update(p):
            np.minimum(mindist, np.linalg.norm(pts - p, axis=1), out=mindist)

    try:
        for k in range(1, n):
            nxt = int(np.argmax(mindist))
            chosen[k] = nxt
            update(pts[nxt])
    finally:
        if pool is not None:
            pool.shutdown()
    return chosen


@dataclass(frozen=True)
class CloudTransform:
    """Record of normalize_cloud: p_norm = (p - center) / scale."""

    center: tuple
    scale: float

    def apply(self, cloud: np.ndarray) -> np.ndarray:
        return (np.asarray(cloud, dtype=np.float64) - np.asarray(self.center)) / self.scale

    def invert(self, cloud: np.ndarray) -> np.ndarray:
        return np.asarray(cloud, dtype=np.float64) * self.scale + np.asarray(self.center)

    def to_dict(self) -> dict:
        return {"center": [float(c) for c in self.center], "scale": float(self.scale)}

    @classmethod
    def from_dict(cls, d: dict) -> "CloudTransform":
        return cls(center=tuple(d["center"]), scale=float(d["scale"]))


def cloud_transform(cloud: np.ndarray) -> CloudTransform:
    """Bounding-box center and largest half-extent of one cloud."""
    pts = np.asarray(cloud, dtype=np.float64)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    scale = float((hi - lo).max() / 2.0)
    if scale <= 0.0:
        raise DegenerateCloud("cloud has zero extent")
    return CloudTransform(center=tuple((lo + hi) / 2.0), scale=scale)


def normalize_cloud(cloud: np.ndarray):
    """Centers the cloud and scales the largest half-extent to 1.

    Returns (normalized points in [-1, 1], transform record).
    """
    t = cloud_transform(cloud)
    return t.apply(cloud), t


def corpus_cloud_transform(clouds) -> CloudTransform:
    """One shared transform for a whole corpus (flag alternative to the
    per-cloud default): bounding box over all points of all clouds."""
    lows = []
    highs = []
    for c in clouds:
        pts = np.asarray(c, dtype=np.float64)
        lows.append(pts.min(axis=0))
        highs.append(pts.max(axis=0))
    lo = np.min(lows, axis=0)
    hi = np.max(highs, axis=0)
    scale = float((hi - lo).max() / 2.0)
    if scale <= 0.0:
        raise DegenerateCloud("corpus has zero extent")
    return CloudTransform(center=tuple((lo + hi) / 2.0), scale=scale)


def image_normalization(images) -> tuple[float, float]:
    """Scalar mean/std over every pixel of every (training) image."""
    stacked = np.stack([np.asarray(im, dtype=np.float64) for im in images])
    mean = float(stacked.mean())
    std = float(stacked.std())
    if std <= 0.0:
        raise ZeroVariance("images have zero pixel variance")
    return mean, std


def normalize_images(images, stats: tuple[float, float] | None = None):
    """Standardizes images to zero mean / unit std.

    stats defaults to statistics of `images` themselves (training use);
    pass the training stats to normalize validation/test images.
    Returns (normalized stack, mean, std).
    """
    stacked = np.stack([np.asarray(im, dtype=np.float64) for im in images])
    mean, std = image_normalization(images) if stats is None else stats
    return (stacked - mean) / std, mean, std
