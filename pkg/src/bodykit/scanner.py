"""Virtual scanner: per-pixel depth scans, ray noise, merges and 2D renders.

Rays pass through the pixel lattice points u = i/W, v = j/H of the image
plane (row-major, row 0 at the top), so doubling the resolution reproduces
the coarse rays exactly at even indices. Scans use perspective cameras
like a physical scanner; the 2D dataset images use an orthographic
frontal camera so silhouette size is unaffected by camera distance.

Ray hits come from exact ray-triangle intersection; an image-space tile
binning only narrows the candidate set per pixel. Ties on hit distance
break to the smallest triangle id.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import BodykitError
from .mesh import TriangleMesh
from .raycast import intersect_pairs, intersect_rays_triangles

# Reference size of the source dataset's merged two-view clouds; desk-scale
# configurations produce fewer points. Not a target.
PAPER_REFERENCE_POINTS = 88408

TILE = 16


@dataclass(frozen=True)
class Camera:
    """Pinhole or orthographic camera; y axis of the image points down."""

    position: tuple
    look_at: tuple
    up: tuple = (0.0, 1.0, 0.0)
    hfov_deg: float = 60.0
    vfov_deg: float = 60.0
    width: int = 200
    height: int = 200
    projection: str = "perspective"
    ortho_width: float = 2.6
    ortho_height: float = 2.6

    def validate(self) -> "Camera":
        if self.projection not in ("perspective", "orthographic"):
            raise BodykitError(f"unknown projection {self.projection!r}")
        if self.projection == "perspective" and not (
            0.0 < self.hfov_deg < 120.0 and 0.0 < self.vfov_deg < 120.0
        ):
            raise BodykitError("fov must be in (0, 120) degrees")
        if self.width < 16 or self.height < 16:
            raise BodykitError("resolution must be at least 16x16")
        return self

    def frame(self):
        """Orthonormal (right, up, forward) with the image y axis down."""
        pos = np.asarray(self.position, dtype=np.float64)
        fwd = np.asarray(self.look_at, dtype=np.float64) - pos
        fwd = fwd / np.linalg.norm(fwd)
        right = np.cross(fwd, np.asarray(self.up, dtype=np.float64))
        right = right / np.linalg.norm(right)
        upv = np.cross(right, fwd)
        return pos, right, upv, fwd

    def rays(self):
        """Origins (h*w, 3) and unit directions (h*w, 3), row-major."""
        pos, right, upv, fwd = self.frame()
        i = np.arange(self.width) / self.width
        j = np.arange(self.height) / self.height
        uu, vv = np.meshgrid(2.0 * i - 1.0, 1.0 - 2.0 * j)
        if self.projection == "perspective":
            tx = np.tan(np.deg2rad(self.hfov_deg) / 2.0)
            ty = np.tan(np.deg2rad(self.vfov_deg) / 2.0)
            d = (
                fwd[None, None, :]
                + (uu * tx)[..., None] * right[None, None, :]
                + (vv * ty)[..., None] * upv[None, None, :]
            )
            d = d / np.linalg.norm(d, axis=2, keepdims=True)
            o = np.broadcast_to(pos, d.shape)
        else:
            o = (
                pos[None, None, :]
                + (uu * self.ortho_width / 2.0)[..., None] * right[None, None, :]
                + (vv * self.ortho_height / 2.0)[..., None] * upv[None, None, :]
            )
            d = np.broadcast_to(fwd, o.shape)
        return o.reshape(-1, 3), np.ascontiguousarray(d.reshape(-1, 3))


@dataclass
class StructuredScan:
    """2D grid of world-space points with a validity mask."""

    points: np.ndarray  # (h, w, 3)
    valid: np.ndarray  # (h, w) bool
    camera: Camera

    @property
    def n_valid(self) -> int:
        return int(self.valid.sum())

    def grid_with_zeros(self) -> np.ndarray:
        """The paper-style export grid: coordinates at valid cells, zeros
        elsewhere (a bitmask disambiguates a true point at the origin)."""
        out = np.where(self.valid[..., None], self.points, 0.0)
        return out


@dataclass
class ImageBuffer:
    pixels: np.ndarray  # (h, w); binary uint8 {0,1} or gray float in [0,1]
    kind: str  # "binary" | "gray"


@dataclass
class TraceResult:
    t: np.ndarray  # (h, w) distances, inf at misses
    tri: np.ndarray  # (h, w) triangle ids, -1 at misses
    points: np.ndarray  # (h, w, 3)
    valid: np.ndarray  # (h, w) bool
    directions: np.ndarray  # (h, w, 3)


def _pixel_coords(camera: Camera, verts: np.ndarray):
    """Vertex positions in continuous pixel coordinates plus a depth-ok flag."""
    pos, right, upv, fwd = camera.frame()
    rel = verts - pos
    x = rel @ right
    y = rel @ upv
    if camera.projection == "perspective":
        z = rel @ fwd
        ok = z > 1e-9
        zs = np.where(ok, z, 1.0)
        tx = np.tan(np.deg2rad(camera.hfov_deg) / 2.0)
        ty = np.tan(np.deg2rad(camera.vfov_deg) / 2.0)
        px = (x / zs / tx + 1.0) / 2.0 * camera.width
        py = (1.0 - y / zs / ty) / 2.0 * camera.height
        return px, py, ok
    px = (x / (camera.ortho_width / 2.0) + 1.0) / 2.0 * camera.width
    py = (1.0 - y / (camera.ortho_height / 2.0)) / 2.0 * camera.height
    return px, py, np.ones(len(verts), dtype=bool)


def trace(mesh: TriangleMesh, camera: Camera) -> TraceResult:
    """Exact per-pixel raycast.

    Each triangle's projected pixel box yields (pixel, triangle) candidate
    pairs; one vectorized intersection pass over the pairs and a
    (pixel, t, tri) sort give the nearest hit per pixel with the
    smallest-id tie-break. Triangles crossing the camera plane cannot be
    projected and are brute-forced against all rays.
    """
    camera.validate()
    h, w = camera.height, camera.width
    origins, dirs = camera.rays()
    t_grid = np.full(h * w, np.inf)
    tri_grid = np.full(h * w, -1, dtype=np.int64)

    if mesh.n_triangles:
        va, vb, vc = mesh.triangle_corners()
        px, py, ok = _pixel_coords(camera, mesh.vertices)
        tpx = px[mesh.triangles]  # (m, 3)
        tpy = py[mesh.triangles]
        tok = ok[mesh.triangles].all(axis=1)

        x0 = np.maximum(np.floor(tpx.min(axis=1)), 0).astype(np.int64)
        x1 = np.minimum(np.ceil(tpx.max(axis=1)), w - 1).astype(np.int64)
        y0 = np.maximum(np.floor(tpy.min(axis=1)), 0).astype(np.int64)
        y1 = np.minimum(np.ceil(tpy.max(axis=1)), h - 1).astype(np.int64)
        bounded = tok & (x1 >= x0) & (y1 >= y0)

        tri_ids = np.nonzero(bounded)[0]
        if len(tri_ids):
            nx = (x1 - x0 + 1)[tri_ids]
            ny = (y1 - y0 + 1)[tri_ids]
            counts = nx * ny
            total = int(counts.sum())
            rep = np.repeat(np.arange(len(tri_ids)), counts)
            local = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
            ox = local % np.repeat(nx, counts)
            oy = local // np.repeat(nx, counts)
            tri_p = tri_ids[rep]
            pix_p = (y0[tri_p] + oy) * w + (x0[tri_p] + ox)
            t_p = intersect_pairs(
                origins[pix_p], dirs[pix_p], va[tri_p], vb[tri_p], vc[tri_p]
            )
            hit = np.isfinite(t_p)
            if hit.any():
                pix_h, t_h, tri_h = pix_p[hit], t_p[hit], tri_p[hit]
                order = np.lexsort((tri_h, t_h, pix_h))
                pix_s = pix_h[order]
                first = np.unique(pix_s, return_index=True)[1]
                rows = order[first]
                t_grid[pix_h[rows]] = t_h[rows]
                tri_grid[pix_h[rows]] = tri_h[rows]

        unbounded = np.nonzero(~tok)[0]
        for start in range(0, len(unbounded), 64):
            chunk = unbounded[start : start + 64]
            tmat = intersect_rays_triangles(origins, dirs, va[chunk], vb[chunk], vc[chunk])
            tmin = tmat.min(axis=1)
            first = np.argmax(tmat == tmin[:, None], axis=1)
            cand_tri = chunk[first]
            better = (tmin < t_grid) | ((tmin == t_grid) & np.isfinite(tmin) & (cand_tri < tri_grid))
            t_grid[better] = tmin[better]
            tri_grid[better] = cand_tri[better]

    valid = np.isfinite(t_grid)
    pts = np.zeros((h * w, 3))
    pts[valid] = origins[valid] + t_grid[valid, None] * dirs[valid]
    return TraceResult(
        t=t_grid.reshape(h, w),
        tri=tri_grid.reshape(h, w),
        points=pts.reshape(h, w, 3),
        valid=valid.reshape(h, w),
        directions=dirs.reshape(h, w, 3),
    )


def depth_scan(mesh: TriangleMesh, camera: Camera) -> StructuredScan:
    """One ray per pixel; hits become world-space points, misses empty cells."""
    tr = trace(mesh, camera)
    return StructuredScan(points=tr.points, valid=tr.valid, camera=camera)


def add_noise(scan: StructuredScan, sigma: float, seed) -> StructuredScan:
    """Gaussian displacement along each point's camera-ray direction.

    Every grid cell consumes one draw keyed by its row-major index, so the
    noise field depends only on (seed, pixel index), not on validity.
    """
    if sigma < 0:
        raise BodykitError("sigma must be >= 0")
    h, w = scan.valid.shape
    draws = np.random.default_rng(seed).standard_normal((h, w))
    if scan.camera.projection == "perspective":
        pos = np.asarray(scan.camera.position, dtype=np.float64)
        d = scan.points - pos
        norm = np.linalg.norm(d, axis=2, keepdims=True)
        norm[norm == 0] = 1.0
        d = d / norm
    else:
        _, _, _, fwd = scan.camera.frame()
        d = np.broadcast_to(fwd, scan.points.shape)
    shifted = scan.points + sigma * draws[..., None] * d
    points = np.where(scan.valid[..., None], shifted, scan.points)
    return StructuredScan(points=points, valid=scan.valid.copy(), camera=scan.camera)


def merge_scans(scans) -> np.ndarray:
    """Unorganized point cloud: valid cells in row-major order, scan order."""
    scans = list(scans)
    if not scans:
        raise BodykitError("merge_scans needs at least one scan")
    parts = [s.points[s.valid] for s in scans]
    return np.concatenate(parts, axis=0)


def render_silhouette(mesh: TriangleMesh, camera: Camera) -> ImageBuffer:
    tr = trace(mesh, camera)
    return ImageBuffer(tr.valid.astype(np.uint8), "binary")


def render_grayscale(mesh: TriangleMesh, camera: Camera) -> ImageBuffer:
    """Lambertian headlight shading: intensity = max(0, -normal . ray)."""
    tr = trace(mesh, camera)
    normals = mesh.face_normals()
    shade = np.zeros(tr.valid.shape, dtype=np.float64)
    v = tr.valid
    n = normals[tr.tri[v]]
    shade[v] = np.maximum(0.0, -(n * tr.directions[v]).sum(axis=1))
    return ImageBuffer(shade, "gray")


def render_views(mesh: TriangleMesh, camera: Camera):
    """Silhouette and gray-scale from a single trace (builder fast path)."""
    tr = trace(mesh, camera)
    sil = ImageBuffer(tr.valid.astype(np.uint8), "binary")
    normals = mesh.face_normals()
    shade = np.zeros(tr.valid.shape, dtype=np.float64)
    v = tr.valid
    n = normals[tr.tri[v]]
    shade[v] = np.maximum(0.0, -(n * tr.directions[v]).sum(axis=1))
    return sil, ImageBuffer(shade, "gray")


# ---------------------------------------------------------------------------
# camera rigs


def two_view_rig(mesh: TriangleMesh, distance: float = 3.0, resolution=(200, 200),
                 fov_deg: float = 65.0) -> list[Camera]:
    """Front (azimuth 0) and back (azimuth 180) cameras aimed at the body."""
    center = 0.5 * (mesh.vertices.min(axis=0) + mesh.vertices.max(axis=0))
    w, h = resolution
    cams = []
    for az in (0.0, np.pi):
        offset = np.array([np.sin(az), 0.0, np.cos(az)]) * distance
        cams.append(
            Camera(
                position=tuple(center + offset),
                look_at=tuple(center),
                hfov_deg=fov_deg,
                vfov_deg=fov_deg,
                width=w,
                height=h,
            ).validate()
        )
    return cams


def frontal_ortho_camera(mesh: TriangleMesh, frame: float = 2.6, size: int = 200) -> Camera:
    """Fixed-scale orthographic frontal camera; expands only if the body
    does not fit the requested frame."""
    lo = mesh.vertices.min(axis=0)
    hi = mesh.vertices.max(axis=0)
    center = 0.5 * (lo + hi)
    need = 1.02 * float(max(hi[0] - lo[0], hi[1] - lo[1]))
    extent = max(frame, need)
    return Camera(
        position=(center[0], center[1], center[2] + 3.0),
        look_at=tuple(center),
        width=size,
        height=size,
        projection="orthographic",
        ortho_width=extent,
        ortho_height=extent,
    ).validate()


# ---------------------------------------------------------------------------
# file formats

SCAN_MAGIC = b"BKSCAN01"


def write_scan(scan: StructuredScan, path) -> None:
    """Binary little-endian: magic, u32 width/height, float32 xyz grid
    (zeros at empty cells), then a row-major validity bitmask."""
    h, w = scan.valid.shape
    grid = scan.grid_with_zeros().astype("<f4")
    mask = np.packbits(scan.valid.reshape(-1).astype(np.uint8))
    with open(path, "wb") as f:
        f.write(SCAN_MAGIC)
        f.write(np.asarray([w, h], dtype="<u4").tobytes())
        f.write(grid.tobytes())
        f.write(mask.tobytes())


def read_scan(path, camera: Camera | None = None) -> StructuredScan:
    with open(path, "rb") as f:
        magic = f.read(len(SCAN_MAGIC))
        if magic != SCAN_MAGIC:
            raise BodykitError(f"{path}: bad scan magic {magic!r}")
        w, h = np.frombuffer(f.read(8), dtype="<u4")
        w, h = int(w), int(h)
        grid = np.frombuffer(f.read(w * h * 12), dtype="<f4").reshape(h, w, 3)
        nbits = h * w
        mask_bytes = f.read((nbits + 7) // 8)
        valid = np.unpackbits(np.frombuffer(mask_bytes, dtype=np.uint8))[:nbits]
    valid = valid.astype(bool).reshape(h, w)
    if camera is None:
        camera = Camera(position=(0, 0, 0), look_at=(0, 0, -1), width=w, height=h)
    return StructuredScan(points=grid.astype(np.float64), valid=valid, camera=camera)


def write_pgm(image: ImageBuffer, path) -> None:
    px = image.pixels
    if px.dtype != np.uint8:
        px = np.clip(np.rint(px * 255.0), 0, 255).astype(np.uint8)
    h, w = px.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(px.tobytes())


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as f:
        data = f.read()
    if not data.startswith(b"P5"):
        raise BodykitError(f"{path}: not a P5 PGM")
    fields, pos = [], 2
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while data[pos : pos + 1] not in (b"\n", b""):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(int(data[start:pos]))
    w, h, maxval = fields
    pos += 1
    px = np.frombuffer(data[pos : pos + w * h], dtype=np.uint8).reshape(h, w)
    return px.astype(np.float64) / float(maxval)


def write_pbm(image: ImageBuffer, path) -> None:
    """P4 bitmap; 1 bits mark body (hit) pixels."""
    px = (image.pixels > 0).astype(np.uint8)
    h, w = px.shape
    packed = np.packbits(px, axis=1)
    with open(path, "wb") as f:
        f.write(f"P4\n{w} {h}\n".encode("ascii"))
        f.write(packed.tobytes())


def read_pbm(path) -> np.ndarray:
    with open(path, "rb") as f:
        data = f.read()
    if not data.startswith(b"P4"):
        raise BodykitError(f"{path}: not a P4 PBM")
    fields, pos = [], 2
    while len(fields) < 2:
        while data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while data[pos : pos + 1] not in (b"\n", b""):
                pos += 1
            continue
        start = pos
        while not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(int(data[start:pos]))
    w, h = fields
    pos += 1
    row_bytes = (w + 7) // 8
    raw = np.frombuffer(data[pos : pos + row_bytes * h], dtype=np.uint8).reshape(h, row_bytes)
    bits = np.unpackbits(raw, axis=1)[:, :w]
    return bits.astype(np.uint8)
