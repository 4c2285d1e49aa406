"""Skeleton-guided annotation: 16 body measurements on a T-pose body.

All outputs are millimeters; geometry stays in meters internally. The
vertical scans work in body-relative terms: the scan step is specified at
a 1.7 m reference stature and scales with the measured body, so uniform
scaling of a body scales every measurement exactly.

Bilateral measurements use the left side by default (configurable).
Tilted planes (head/neck) are defined in the body frame derived from the
shoulder line, so rotating a body about Y does not change any output.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bodygen import BodySample
from .errors import (
    AmbiguousSection,
    AxillaNotFound,
    CrotchNotFound,
    EmptyRegion,
    MeasurementError,
    NoSection,
)
from .hull import convex_hull_perimeter, loop_perimeter
from .mesh import Plane, axis_extent, direction_extent
from .slicing import YLevelScanner, slice_mesh

MEASUREMENT_NAMES = (
    "head_circumference",
    "neck_circumference",
    "shoulder_to_shoulder",
    "arm_span",
    "shoulder_to_wrist",
    "torso_length",
    "bicep_circumference",
    "wrist_circumference",
    "chest_circumference",
    "waist_circumference",
    "pelvis_circumference",
    "leg_length",
    "inner_leg_length",
    "thigh_circumference",
    "knee_circumference",
    "calf_length",
)

REFERENCE_STATURE = 1.7
AMBIGUITY_MM = 1.0
BRACKET_FACTOR = 16


@dataclass(frozen=True)
class AnnotationConfig:
    """Annotation knobs, recorded in dataset manifests.

    scan_step is in meters at the reference stature and is rescaled by
    (stature / 1.7) per body, which keeps measure_all exactly
    scale-equivariant. bracketed_scan accelerates the axilla/crotch
    searches with a coarse pass plus fine refinement; it returns the
    same level as the plain scan whenever the loop-count transition is
    monotone (always true for generated bodies). Set it False to force
    the literal level-by-level scan.
    """

    scan_step: float = 0.001
    tilt_deg: float = 15.0
    waist_band: float = 0.05
    use_hull: bool = True
    side: str = "left"
    bracketed_scan: bool = True
    axilla_max_drop: float = 0.3

    def validate(self) -> "AnnotationConfig":
        if not self.scan_step > 0:
            raise ValueError("scan_step must be > 0")
        if not 0.0 <= self.tilt_deg <= 45.0:
            raise ValueError("tilt_deg must be in [0, 45]")
        if not 0.0 < self.waist_band <= 0.15:
            raise ValueError("waist_band must be in (0, 0.15]")
        if self.side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")
        return self

    def to_dict(self) -> dict:
        return {
            "scan_step": self.scan_step,
            "tilt_deg": self.tilt_deg,
            "waist_band": self.waist_band,
            "use_hull": self.use_hull,
            "side": self.side,
            "bracketed_scan": self.bracketed_scan,
            "axilla_max_drop": self.axilla_max_drop,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnnotationConfig":
        return cls(**d).validate()


class MeasurementSet:
    """Ordered 16-tuple of named measurements in millimeters."""

    def __init__(self, values):
        if isinstance(values, dict):
            values = [values[name] for name in MEASUREMENT_NAMES]
        self.values = np.asarray(values, dtype=np.float64)
        if self.values.shape != (16,):
            raise ValueError("MeasurementSet needs exactly 16 values")

    def __getitem__(self, name: str) -> float:
        return float(self.values[MEASUREMENT_NAMES.index(name)])

    def as_dict(self) -> dict:
        return {n: float(v) for n, v in zip(MEASUREMENT_NAMES, self.values)}

    def violations(self) -> list[str]:
        """Anatomical sanity violations; empty for a valid body."""
        out = []
        if not (self.values > 0).all():
            bad = [n for n, v in zip(MEASUREMENT_NAMES, self.values) if v <= 0]
            out.append(f"non-positive measurements: {bad}")
        if self["arm_span"] < self["shoulder_to_shoulder"]:
            out.append("arm_span < shoulder_to_shoulder")
        if self["leg_length"] < self["calf_length"]:
            out.append("leg_length < calf_length")
        if self["chest_circumference"] < self["wrist_circumference"]:
            out.append("chest_circumference < wrist_circumference")
        return out

    def __eq__(self, other):
        return isinstance(other, MeasurementSet) and np.array_equal(self.values, other.values)


# ---------------------------------------------------------------------------
# CSV boundary (mm, 3 decimals, fixed column order)

CSV_HEADER = "id," + ",".join(MEASUREMENT_NAMES)


def csv_row(sample_id: str, ms: MeasurementSet) -> str:
    return sample_id + "," + ",".join(f"{v:.3f}" for v in ms.values)


def write_measurements_csv(path, rows: dict) -> None:
    """rows: mapping sample id -> MeasurementSet, written in id order."""
    lines = [CSV_HEADER] + [csv_row(k, rows[k]) for k in sorted(rows)]
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def read_measurements_csv(path) -> dict:
    with open(path) as f:
        lines = [ln.strip() for ln in f if ln.strip()]
    head = lines[0].split(",")
    if head != CSV_HEADER.split(","):
        raise ValueError(f"{path}: unexpected measurement CSV header")
    out = {}
    for ln in lines[1:]:
        parts = ln.split(",")
        out[parts[0]] = MeasurementSet([float(x) for x in parts[1:]])
    return out


# ---------------------------------------------------------------------------
# measurement context


class MeasurementContext:
    """Shared per-body state: frame, stature-scaled step, cached scanners."""

    def __init__(self, body: BodySample, cfg: AnnotationConfig):
        cfg.validate()
        self.body = body
        self.mesh = body.mesh
        self.sk = body.skeleton
        self.cfg = cfg
        lo, hi = axis_extent(self.mesh, "Y")
        self.stature = hi - lo
        self.top_y = hi
        self.step = cfg.scan_step * self.stature / REFERENCE_STATURE
        d = self.sk["left_shoulder"] - self.sk["right_shoulder"]
        d = d - np.array([0.0, d[1], 0.0])  # project to horizontal
        self.xhat = d / np.linalg.norm(d)
        self.yhat = np.array([0.0, 1.0, 0.0])
        self.zhat = np.cross(self.xhat, self.yhat)
        self._scanners: dict = {}

    def joint(self, name: str) -> np.ndarray:
        if name.startswith(("shoulder", "elbow", "wrist", "hip", "knee", "ankle")):
            name = f"{self.cfg.side}_{name}"
        return self.sk[name]

    def scanner(self, lo=None, hi=None) -> YLevelScanner:
        key = (lo, hi)
        if key not in self._scanners:
            rng = None if lo is None else (lo, hi)
            self._scanners[key] = YLevelScanner(self.mesh, y_range=rng)
        return self._scanners[key]

    def tilt_normal(self) -> np.ndarray:
        t = np.deg2rad(self.cfg.tilt_deg)
        n = np.cos(t) * self.yhat + np.sin(t) * self.zhat
        return n / np.linalg.norm(n)

    def perimeter(self, cs) -> float:
        return convex_hull_perimeter(cs) if self.cfg.use_hull else loop_perimeter(cs)


def _point_segment_distance(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return np.linalg.norm(points - a, axis=1)
    t = np.clip((points - a) @ ab / denom, 0.0, 1.0)
    proj = a + t[:, None] * ab
    return np.linalg.norm(points - proj, axis=1)


def _select_nearest(centroids: np.ndarray, a, b):
    """Index of the centroid nearest segment (a, b).

    Near-ties within 1 mm resolve deterministically by smaller centroid Y
    then X; AmbiguousSection is raised only when even those coincide.
    """
    d = _point_segment_distance(centroids, np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64))
    order = np.argsort(d, kind="stable")
    best = order[0]
    if len(order) > 1:
        tied = [i for i in order if d[i] - d[order[0]] < AMBIGUITY_MM / 1000.0]
        if len(tied) > 1:
            keys = [(centroids[i, 1], centroids[i, 0], i) for i in tied]
            keys.sort()
            if keys[0][:2] == keys[1][:2]:
                raise AmbiguousSection(
                    f"{len(tied)} loops equidistant within {AMBIGUITY_MM} mm and tied centroids"
                )
            best = keys[0][2]
    return int(best)


def _sliced_circumference(ctx: MeasurementContext, plane: Plane, anchor_a, anchor_b) -> float:
    loops = slice_mesh(ctx.mesh, plane)
    if not loops:
        raise NoSection(f"plane normal={plane.normal} offset={plane.offset} misses mesh")
    cents = np.stack([cs.centroid for cs in loops])
    pick = _select_nearest(cents, anchor_a, anchor_b)
    return ctx.perimeter(loops[pick])


def _level_circumference(ctx: MeasurementContext, scanner: YLevelScanner, y: float, anchor_a, anchor_b):
    loops = scanner.loops_at(y)
    if loops is None or loops.count == 0:
        return None
    pick = _select_nearest(loops.centroids, anchor_a, anchor_b)
    if ctx.cfg.use_hull:
        return loops.hull_perimeter(pick)
    return loops.raw_perimeter(pick)


def _levels(lo: float, hi: float, step: float) -> np.ndarray:
    count = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(max(count, 1))


# ---------------------------------------------------------------------------
# individual measurements (meters in, millimeters out)


def joint_distance_measurements(ctx: MeasurementContext) -> dict:
    sk, j = ctx.sk, ctx.joint
    return {
        "shoulder_to_shoulder": 1000.0 * float(np.linalg.norm(sk["left_shoulder"] - sk["right_shoulder"])),
        "shoulder_to_wrist": 1000.0 * float(np.linalg.norm(j("shoulder") - j("wrist"))),
        "torso_length": 1000.0 * float(np.linalg.norm(sk["neck"] - sk["pelvis"])),
        "leg_length": 1000.0 * float(np.linalg.norm(sk["pelvis"] - j("ankle"))),
        "calf_length": 1000.0 * float(np.linalg.norm(j("knee") - j("ankle"))),
    }


def arm_span(mesh, direction=None) -> float:
    """Fingertip-to-fingertip span in mm: extent along the arm axis."""
    if direction is None:
        lo, hi = axis_extent(mesh, "X")
    else:
        lo, hi = direction_extent(mesh, direction)
    return 1000.0 * (hi - lo)


def head_circumference(ctx: MeasurementContext) -> float:
    hj = ctx.sk["head"]
    level = 0.5 * (hj[1] + ctx.top_y)
    anchor = hj + (level - hj[1]) * ctx.yhat
    plane = Plane.from_point(ctx.tilt_normal(), anchor)
    axis_a = hj
    axis_b = hj + (ctx.top_y - hj[1]) * ctx.yhat
    return 1000.0 * _sliced_circumference(ctx, plane, axis_a, axis_b)


def neck_circumference(ctx: MeasurementContext) -> float:
    nj, hj = ctx.sk["neck"], ctx.sk["head"]
    anchor = nj + (hj - nj) / 3.0
    plane = Plane.from_point(ctx.tilt_normal(), anchor)
    return 1000.0 * _sliced_circumference(ctx, plane, nj, hj)


def bicep_circumference(ctx: MeasurementContext) -> float:
    a, b = ctx.joint("shoulder"), ctx.joint("elbow")
    plane = Plane.from_point(ctx.xhat, 0.5 * (a + b))
    return 1000.0 * _sliced_circumference(ctx, plane, a, b)


def wrist_circumference(ctx: MeasurementContext) -> float:
    a, b = ctx.joint("elbow"), ctx.joint("wrist")
    plane = Plane.from_point(ctx.xhat, b)
    return 1000.0 * _sliced_circumference(ctx, plane, a, b)


def thigh_circumference(ctx: MeasurementContext) -> float:
    a, b = ctx.joint("hip"), ctx.joint("knee")
    y = 0.5 * (a[1] + b[1])
    val = _level_circumference(ctx, ctx.scanner(), y, a, b)
    if val is None:
        raise NoSection(f"no cross-section at thigh level y={y}")
    return 1000.0 * val


def knee_circumference(ctx: MeasurementContext) -> float:
    a, b = ctx.joint("knee"), ctx.joint("ankle")
    val = _level_circumference(ctx, ctx.scanner(), a[1], a, b)
    if val is None:
        raise NoSection(f"no cross-section at knee level y={a[1]}")
    return 1000.0 * val


def _first_level_with_single_loop(scanner, levels, bracketed) -> float | None:
    """First level (in scan order) whose cross-section has exactly one loop."""
    if not bracketed:
        for y in levels:
            if scanner.count_at(float(y)) == 1:
                return float(y)
        return None
    n = len(levels)
    coarse = list(range(0, n, BRACKET_FACTOR))
    if coarse[-1] != n - 1:
        coarse.append(n - 1)
    prev = -1
    hit = None
    for k in coarse:
        if scanner.count_at(float(levels[k])) == 1:
            hit = k
            break
        prev = k
    if hit is None:
        return None
    for i in range(prev + 1, hit):
        if scanner.count_at(float(levels[i])) == 1:
            return float(levels[i])
    return float(levels[hit])


def detect_axilla(ctx: MeasurementContext) -> float:
    """Y level (meters) where the arms stop intersecting the scan plane."""
    y_s = float(ctx.joint("shoulder")[1])
    depth = ctx.cfg.axilla_max_drop * ctx.stature
    levels = y_s - _levels(0.0, depth, ctx.step)
    scanner = ctx.scanner(y_s - depth - ctx.step, y_s + ctx.step)
    y = _first_level_with_single_loop(scanner, levels, ctx.cfg.bracketed_scan)
    if y is None:
        raise AxillaNotFound(f"no single-loop level within {depth:.3f} m below the shoulder")
    return y


def inner_leg_length(ctx: MeasurementContext) -> float:
    """Crotch height above the ankle, mm; upward scan from the ankle."""
    ankle_y = float(ctx.joint("ankle")[1])
    pelvis_y = float(ctx.sk["pelvis"][1])
    levels = _levels(ankle_y, pelvis_y, ctx.step)
    scanner = ctx.scanner(ankle_y - ctx.step, pelvis_y + ctx.step)
    if scanner.count_at(float(levels[0])) < 2:
        raise CrotchNotFound("legs are not separable at the ankle level")
    y = _first_level_with_single_loop(scanner, levels, ctx.cfg.bracketed_scan)
    if y is None:
        raise CrotchNotFound("no single-loop level below the pelvis")
    return 1000.0 * (y - ankle_y)


def _region_extremum(ctx: MeasurementContext, lo: float, hi: float, mode: str) -> float:
    """Extremal torso circumference (meters) over scanned levels in [lo, hi]."""
    if hi < lo:
        lo, hi = hi, lo
    spine_a, spine_b = ctx.sk["pelvis"], ctx.sk["neck"]
    scanner = ctx.scanner(lo - ctx.step, hi + ctx.step)
    best = None
    for y in _levels(lo, hi, ctx.step):
        val = _level_circumference(ctx, scanner, float(y), spine_a, spine_b)
        if val is None:
            continue
        if best is None or (val > best if mode == "max" else val < best):
            best = val
    if best is None:
        raise EmptyRegion(f"no cross-sections in y range [{lo}, {hi}]")
    return best


def chest_circumference(ctx: MeasurementContext, axilla_y: float | None = None) -> float:
    if axilla_y is None:
        axilla_y = detect_axilla(ctx)
    chest_joint_y = float(ctx.sk["upper_spine"][1])
    return 1000.0 * _region_extremum(ctx, chest_joint_y, axilla_y, "max")


def waist_circumference(ctx: MeasurementContext) -> float:
    mid = float(ctx.sk["mid_spine"][1])
    half = ctx.cfg.waist_band * ctx.stature
    return 1000.0 * _region_extremum(ctx, mid - half, mid + half, "min")


def pelvis_circumference(ctx: MeasurementContext) -> float:
    pelvis_y = float(ctx.sk["pelvis"][1])
    hip_y = float(ctx.joint("hip")[1])
    return 1000.0 * _region_extremum(ctx, hip_y, pelvis_y, "max")


# ---------------------------------------------------------------------------


def measure_all(body: BodySample, cfg: AnnotationConfig = AnnotationConfig()) -> MeasurementSet:
    """All 16 measurements (mm) in the fixed output order."""
    ctx = MeasurementContext(body, cfg)
    values: dict = {}

    def run(name, fn, *args):
        try:
            values[name] = fn(*args)
        except Exception as exc:  # attach the measurement name
            raise MeasurementError(name, exc) from exc

    run("arm_span", lambda: arm_span(ctx.mesh, ctx.xhat))
    try:
        values.update(joint_distance_measurements(ctx))
    except Exception as exc:
        raise MeasurementError("joint_distances", exc) from exc
    run("head_circumference", head_circumference, ctx)
    run("neck_circumference", neck_circumference, ctx)
    run("bicep_circumference", bicep_circumference, ctx)
    run("wrist_circumference", wrist_circumference, ctx)
    run("thigh_circumference", thigh_circumference, ctx)
    run("knee_circumference", knee_circumference, ctx)
    run("inner_leg_length", inner_leg_length, ctx)

    def chest_with_axilla():
        return chest_circumference(ctx)

    run("chest_circumference", chest_with_axilla)
    run("waist_circumference", waist_circumference, ctx)
    run("pelvis_circumference", pelvis_circumference, ctx)
    return MeasurementSet(values)
