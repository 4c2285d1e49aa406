"""Procedural parametric humanoid bodies with analytic measurement ground truth.

Bodies are T-pose (arms along +-X, Y up, Z toward the camera), feet at
y = 0 and head top at y = stature. The surface is a union of closed
ring-lofted components (torso, head, neck, two arms, two legs) that
interpenetrate at the joins; every component is watertight on its own,
so the edge-sharing check holds for the whole mesh and every horizontal
cross-section is a set of closed loops.

Radius profiles are monotone-cubic through a small knot table and hold
constant plateaus around the bicep/wrist/thigh/knee measurement stations,
which makes those circumferences exact inscribed n-gons of known radius.
Junction heights (crotch, armpit) and the torso ring table are recorded
as analytic references.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import InvalidParams, MissingJoint, NotWatertight, ParseError
from .mesh import Skeleton, TriangleMesh, concatenate
from . import meshio

# Vertical landmarks as fractions of stature.
Y_SHOULDER = 0.818
Y_NECK_JOINT = 0.845
Y_CHEST_JOINT = 0.72
Y_MID_SPINE = 0.63
Y_PELVIS = 0.57
HEAD_RY = 0.060  # head half-height; head top is exactly at stature
HEAD_JOINT_DROP = 0.6  # head joint sits 0.6 half-heights below head center

TORSO_EXPONENT = 2.4  # superellipse exponent of torso cross-sections

FACTOR_RANGE = (0.6, 1.6)
STATURE_RANGE = (1.2, 2.2)

GENDERS = ("female", "male")


@dataclass(frozen=True)
class GenderPreset:
    """Base proportions as fractions of stature."""

    stature_mean: float
    stature_sd: float
    shoulder_x: float
    hip_x: float
    neck_r: float
    bicep_r: float
    wrist_r: float
    thigh_r: float
    knee_r: float
    ankle_r: float
    calf_r: float
    head_rx: float
    head_rz: float
    # torso knots: (y-fraction or None for the bottom ring, rx, rz)
    torso: tuple = ()


PRESETS = {
    "female": GenderPreset(
        stature_mean=1.635,
        stature_sd=0.065,
        shoulder_x=0.104,
        hip_x=0.056,
        neck_r=0.0175,
        bicep_r=0.027,
        wrist_r=0.0145,
        thigh_r=0.043,
        knee_r=0.026,
        ankle_r=0.015,
        calf_r=0.027,
        head_rx=0.046,
        head_rz=0.054,
        torso=(
            (None, 0.090, 0.058),
            (0.545, 0.100, 0.064),
            (0.630, 0.071, 0.047),
            (0.745, 0.088, 0.058),
            (0.818, 0.080, 0.048),
            (0.838, 0.050, 0.035),
        ),
    ),
    "male": GenderPreset(
        stature_mean=1.765,
        stature_sd=0.070,
        shoulder_x=0.118,
        hip_x=0.050,
        neck_r=0.0195,
        bicep_r=0.032,
        wrist_r=0.0165,
        thigh_r=0.041,
        knee_r=0.027,
        ankle_r=0.016,
        calf_r=0.029,
        head_rx=0.048,
        head_rz=0.056,
        torso=(
            (None, 0.088, 0.056),
            (0.545, 0.092, 0.060),
            (0.630, 0.078, 0.053),
            (0.745, 0.098, 0.064),
            (0.818, 0.088, 0.052),
            (0.838, 0.052, 0.036),
        ),
    ),
}


@dataclass(frozen=True)
class BodyParams:
    """Generator inputs; identical params give a bit-identical body."""

    gender: str = "female"
    stature: float | None = None  # meters; preset mean when None
    head_girth: float = 1.0
    neck_girth: float = 1.0
    torso_girth: float = 1.0
    arm_girth: float = 1.0
    leg_girth: float = 1.0
    arm_length: float = 1.0
    leg_length: float = 1.0
    seed: int = 0

    def resolved_stature(self) -> float:
        return PRESETS[self.gender].stature_mean if self.stature is None else self.stature

    def validate(self) -> "BodyParams":
        if self.gender not in GENDERS:
            raise InvalidParams("gender", f"must be one of {GENDERS}, got {self.gender!r}")
        s = self.resolved_stature()
        if not (STATURE_RANGE[0] <= s <= STATURE_RANGE[1]):
            raise InvalidParams("stature", f"{s} outside {STATURE_RANGE}")
        for name in (
            "head_girth",
            "neck_girth",
            "torso_girth",
            "arm_girth",
            "leg_girth",
            "arm_length",
            "leg_length",
        ):
            v = getattr(self, name)
            if not (FACTOR_RANGE[0] <= v <= FACTOR_RANGE[1]):
                raise InvalidParams(name, f"{v} outside {FACTOR_RANGE}")
        return self


@dataclass
class BodyRefs:
    """Closed-form construction values used as measurement oracles. Meters."""

    stature: float
    segments: int
    radii: dict = field(default_factory=dict)  # limb/neck radii
    circumferences: dict = field(default_factory=dict)  # smooth 2*pi*r values
    head_semi_axes: tuple = ()  # (rx, ry, rz)
    head_center_y: float = 0.0
    crotch_y: float = 0.0
    axilla_y: float = 0.0
    torso_levels: np.ndarray | None = None
    torso_rx: np.ndarray | None = None
    torso_rz: np.ndarray | None = None
    torso_exponent: float = TORSO_EXPONENT


@dataclass
class BodySample:
    mesh: TriangleMesh
    skeleton: Skeleton
    params: BodyParams | None = None
    refs: BodyRefs | None = None


# ---------------------------------------------------------------------------
# ring lofting


def superellipse_ring(center, u, v, ru, rv, exponent, n) -> np.ndarray:
    theta = 2.0 * np.pi * np.arange(n) / n
    e = 2.0 / exponent
    cu = np.sign(np.cos(theta)) * np.abs(np.cos(theta)) ** e
    sv = np.sign(np.sin(theta)) * np.abs(np.sin(theta)) ** e
    return (
        np.asarray(center, dtype=np.float64)
        + ru * cu[:, None] * np.asarray(u, dtype=np.float64)
        + rv * sv[:, None] * np.asarray(v, dtype=np.float64)
    )


def circle_ring(center, u, v, r, n) -> np.ndarray:
    return superellipse_ring(center, u, v, r, r, 2.0, n)


def tube_mesh(rings: np.ndarray, apex_start, apex_end) -> TriangleMesh:
    """Closed tube over (k, n, 3) rings ordered along the axis.

    Rings must be generated with basis (u, v) satisfying u x v = -axis so
    that the winding here faces outward (see circle_ring callers).
    """
    k, n, _ = rings.shape
    verts = np.concatenate([rings.reshape(-1, 3), [apex_start], [apex_end]])
    ia, ib = k * n, k * n + 1
    j = np.arange(n)
    j1 = (j + 1) % n
    tris = []
    for r in range(k - 1):
        a = r * n + j
        b = r * n + j1
        c = (r + 1) * n + j1
        d = (r + 1) * n + j
        tris.append(np.stack([a, c, b], axis=1))
        tris.append(np.stack([a, d, c], axis=1))
    tris.append(np.stack([np.full(n, ia), j, j1], axis=1))  # start cap
    last = (k - 1) * n
    tris.append(np.stack([np.full(n, ib), last + j1, last + j], axis=1))  # end cap
    return TriangleMesh(verts, np.concatenate(tris))


def _stations(knot_xs, step) -> np.ndarray:
    """Strictly increasing station list: knots plus evenly spaced fill."""
    lo, hi = knot_xs[0], knot_xs[-1]
    fill = np.arange(lo, hi, step)
    xs = np.unique(np.concatenate([np.asarray(knot_xs, dtype=np.float64), fill, [hi]]))
    keep = np.concatenate([[True], np.diff(xs) > 1e-9])
    return xs[keep]


def _profile_tube(axis_dir, u, v, origin, knots, step, n, apex_lo_x, apex_hi_x):
    """Tube with circular sections along a line origin + x * axis_dir.

    knots: [(x, r), ...] strictly increasing x. Plateaus come from equal
    consecutive radii; PCHIP keeps them exactly flat and never overshoots.
    """
    xs = np.asarray([k[0] for k in knots])
    rs = np.asarray([k[1] for k in knots])
    prof = PchipInterpolator(xs, rs)
    stations = _stations(xs, step)
    radii = prof(stations)
    axis_dir = np.asarray(axis_dir, dtype=np.float64)
    origin = np.asarray(origin, dtype=np.float64)
    rings = np.stack(
        [circle_ring(origin + x * axis_dir, u, v, r, n) for x, r in zip(stations, radii)]
    )
    mesh = tube_mesh(rings, origin + apex_lo_x * axis_dir, origin + apex_hi_x * axis_dir)
    return mesh, stations, radii


# ---------------------------------------------------------------------------
# body assembly

X = np.array([1.0, 0.0, 0.0])
Y = np.array([0.0, 1.0, 0.0])
Z = np.array([0.0, 0.0, 1.0])


def generate_body(params: BodyParams, segments: int = 64, ring_step: float = 0.014) -> BodySample:
    """Builds the watertight T-pose mesh, skeleton and analytic references."""
    params.validate()
    if segments < 8 or segments % 4:
        raise InvalidParams("segments", "need >= 8 and divisible by 4")
    p = PRESETS[params.gender]
    s = params.resolved_stature()
    step = ring_step * s
    n = segments

    g_head, g_neck, g_torso = params.head_girth, params.neck_girth, params.torso_girth
    g_arm, g_leg = params.arm_girth, params.leg_girth
    l_arm, l_leg = params.arm_length, params.leg_length

    crotch = s * (0.40 + 0.05 * l_leg)
    hip_y = crotch + 0.045 * s
    knee_y = 0.60 * crotch
    ankle_y = 0.11 * crotch
    thigh_y = 0.5 * (hip_y + knee_y)

    # --- legs ------------------------------------------------------------
    r_thigh = p.thigh_r * s * g_leg
    r_knee = p.knee_r * s * g_leg
    r_leg_top = 1.035 * r_thigh
    hip_dx = max(p.hip_x * s, r_leg_top + 0.009 * s)
    dpl = 0.007 * s  # plateau half-width
    leg_knots = [
        (0.015 * s, 0.55 * p.ankle_r * s * g_leg),
        (ankle_y, p.ankle_r * s * g_leg),
        (0.45 * crotch, p.calf_r * s * g_leg),
        (knee_y - dpl, r_knee),
        (knee_y + dpl, r_knee),
        (thigh_y - dpl, r_thigh),
        (thigh_y + dpl, r_thigh),
        (crotch - 0.025 * s, r_leg_top),
        (crotch - 0.007 * s, 0.92 * r_leg_top),
    ]
    legs = []
    for side in (+1.0, -1.0):
        orig = np.array([side * hip_dx, 0.0, 0.0])
        mesh, _, _ = _profile_tube(Y, X, Z, orig, leg_knots, step, n, 0.0, crotch)
        legs.append(mesh)

    # --- arms ------------------------------------------------------------
    y_s = Y_SHOULDER * s
    x_s = p.shoulder_x * s
    x_e = x_s + 0.155 * s * l_arm
    x_w = x_s + 0.305 * s * l_arm
    x_tip = x_w + 0.095 * s * l_arm
    r_up = p.bicep_r * s * g_arm
    r_wr = p.wrist_r * s * g_arm
    arm_knots = [
        (0.35 * x_s, r_up),
        (x_e - 0.05 * s * l_arm, r_up),
        (x_e, 0.80 * r_up),
        (x_e + 0.07 * s * l_arm, 0.82 * r_up),
        (x_w - 0.018 * s, r_wr),
        (x_w + 0.009 * s, r_wr),
        (x_w + 0.05 * s * l_arm, 1.12 * r_wr),
        (x_tip - 0.02 * s * l_arm, 0.5 * r_wr),
    ]
    arms = []
    for side, u, v in ((+1.0, Z, Y), (-1.0, Y, Z)):
        orig = np.array([0.0, y_s, 0.0])
        mesh, _, _ = _profile_tube(side * X, u, v, orig, arm_knots, step, n, 0.30 * x_s, x_tip)
        arms.append(mesh)

    # --- torso -----------------------------------------------------------
    y_tb = crotch - 0.02 * s
    knot_y = np.array([y_tb] + [k[0] * s for k in p.torso[1:]])
    knot_rx = np.array([k[1] for k in p.torso]) * s * g_torso
    knot_rz = np.array([k[2] for k in p.torso]) * s * g_torso
    fx = PchipInterpolator(knot_y, knot_rx)
    fz = PchipInterpolator(knot_y, knot_rz)
    t_levels = _stations(knot_y, step)
    t_rx = fx(t_levels)
    t_rz = fz(t_levels)
    t_rings = np.stack(
        [
            superellipse_ring([0.0, y, 0.0], X, Z, rx, rz, TORSO_EXPONENT, n)
            for y, rx, rz in zip(t_levels, t_rx, t_rz)
        ]
    )
    torso = tube_mesh(
        t_rings,
        np.array([0.0, y_tb - 0.012 * s, 0.0]),
        np.array([0.0, knot_y[-1] + 0.012 * s, 0.0]),
    )

    # --- neck ------------------------------------------------------------
    r_neck = p.neck_r * s * g_neck
    neck_lo, neck_hi = 0.830 * s, 0.895 * s
    neck_rings = np.stack(
        [circle_ring([0.0, y, 0.0], X, Z, r_neck, n) for y in (neck_lo, 0.5 * (neck_lo + neck_hi), neck_hi)]
    )
    neck = tube_mesh(neck_rings, np.array([0.0, 0.823 * s, 0.0]), np.array([0.0, 0.902 * s, 0.0]))

    # --- head ------------------------------------------------------------
    b_h = HEAD_RY * s
    a_h = p.head_rx * s * g_head
    c_h = p.head_rz * s * g_head
    y_hc = s - b_h
    lat = -np.pi / 2 + np.pi * np.arange(1, 25) / 25
    h_rings = np.stack(
        [
            superellipse_ring(
                [0.0, y_hc + b_h * np.sin(phi), 0.0], X, Z,
                a_h * np.cos(phi), c_h * np.cos(phi), 2.0, n,
            )
            for phi in lat
        ]
    )
    head = tube_mesh(h_rings, np.array([0.0, y_hc - b_h, 0.0]), np.array([0.0, s, 0.0]))

    mesh = concatenate([torso, head, neck, arms[0], arms[1], legs[0], legs[1]])

    y_hj = y_hc - HEAD_JOINT_DROP * b_h
    joints = {
        "head": [0.0, y_hj, 0.0],
        "neck": [0.0, Y_NECK_JOINT * s, 0.0],
        "upper_spine": [0.0, Y_CHEST_JOINT * s, 0.0],
        "mid_spine": [0.0, Y_MID_SPINE * s, 0.0],
        "pelvis": [0.0, Y_PELVIS * s, 0.0],
    }
    for side, sign in (("left", +1.0), ("right", -1.0)):
        joints[f"{side}_shoulder"] = [sign * x_s, y_s, 0.0]
        joints[f"{side}_elbow"] = [sign * x_e, y_s, 0.0]
        joints[f"{side}_wrist"] = [sign * x_w, y_s, 0.0]
        joints[f"{side}_hip"] = [sign * hip_dx, hip_y, 0.0]
        joints[f"{side}_knee"] = [sign * hip_dx, knee_y, 0.0]
        joints[f"{side}_ankle"] = [sign * hip_dx, ankle_y, 0.0]
    skeleton = Skeleton(joints)

    refs = BodyRefs(
        stature=s,
        segments=n,
        radii={
            "bicep": r_up,
            "wrist": r_wr,
            "thigh": r_thigh,
            "knee": r_knee,
            "neck": r_neck,
        },
        circumferences={
            k: 2.0 * np.pi * r for k, r in
            {"bicep": r_up, "wrist": r_wr, "thigh": r_thigh, "knee": r_knee, "neck": r_neck}.items()
        },
        head_semi_axes=(a_h, b_h, c_h),
        head_center_y=y_hc,
        crotch_y=crotch,
        axilla_y=y_s - r_up,
        torso_levels=t_levels,
        torso_rx=t_rx,
        torso_rz=t_rz,
    )
    return BodySample(mesh, skeleton, params, refs)


# ---------------------------------------------------------------------------
# population sampling


def _truncnorm(rng, mean, sd, lo, hi) -> float:
    for _ in range(1000):
        v = rng.normal(mean, sd)
        if lo <= v <= hi:
            return float(v)
    return float(np.clip(v, lo, hi))


def draw_params(gender: str, rng: np.random.Generator, seed: int) -> BodyParams:
    p = PRESETS[gender]
    girth = dict(mean=1.0, sd=0.12, lo=0.7, hi=1.4)
    length = dict(mean=1.0, sd=0.06, lo=0.8, hi=1.2)

    def g(spec):
        return _truncnorm(rng, spec["mean"], spec["sd"], spec["lo"], spec["hi"])

    return BodyParams(
        gender=gender,
        stature=_truncnorm(rng, p.stature_mean, p.stature_sd, 1.45, 2.0),
        head_girth=g(girth),
        neck_girth=g(girth),
        torso_girth=g(girth),
        arm_girth=g(girth),
        leg_girth=g(girth),
        arm_length=g(length),
        leg_length=g(length),
        seed=seed,
    ).validate()


def population_params(count: int, female_fraction: float = 0.5, seed: int = 0) -> list[BodyParams]:
    """Deterministic parameter draws; genders interleaved to exact counts."""
    if count < 1:
        raise InvalidParams("count", "must be >= 1")
    out = []
    for i in range(count):
        gender = "female" if int((i + 1) * female_fraction) > int(i * female_fraction) else "male"
        rng = np.random.default_rng([seed, i])
        out.append(draw_params(gender, rng, seed=i))
    return out


def sample_population(count: int, female_fraction: float = 0.5, seed: int = 0,
                      segments: int = 64):
    """Stream of generated BodySamples, deterministic given the seed."""
    for params in population_params(count, female_fraction, seed):
        yield generate_body(params, segments=segments)


def joint_sanity(sample: BodySample, tol: float = 0.05) -> list[str]:
    """Joints farther than tol from the surface and outside every closed
    component; empty for a sane body. Containment is tested per component
    because the generated components interpenetrate."""
    from .mesh import TriangleMesh, connected_components
    from .raycast import intersect_rays_triangles

    mesh = sample.mesh
    labels = connected_components(mesh)
    a, b, c = mesh.triangle_corners()
    direction = np.array([1e-4, 1.0, 3.7e-5])
    direction /= np.linalg.norm(direction)
    bad = []
    for name, p in sample.skeleton.joints.items():
        near = np.linalg.norm(mesh.vertices - p, axis=1).min() <= tol
        if near:
            continue
        inside = False
        for comp in np.unique(labels):
            m = labels == comp
            t = intersect_rays_triangles(p.reshape(1, 3), direction.reshape(1, 3),
                                         a[m], b[m], c[m])[0]
            if np.isfinite(t).sum() % 2 == 1:
                inside = True
                break
        if not inside:
            bad.append(name)
    return bad


def import_body(mesh_path, skeleton_path) -> BodySample:
    """External body + skeleton; analytic references are unavailable."""
    mesh_path = str(mesh_path)
    if mesh_path.endswith(".obj"):
        mesh = meshio.read_obj(mesh_path)
    elif mesh_path.endswith(".ply"):
        mesh = meshio.read_ply_mesh(mesh_path)
    else:
        raise ParseError(f"{mesh_path}: unsupported mesh format (want .obj or .ply)")
    skeleton = meshio.read_skeleton_json(skeleton_path)
    missing = skeleton.missing_required()
    if missing:
        raise MissingJoint(missing[0])
    if not mesh.is_watertight():
        warnings.warn(
            f"{mesh_path}: mesh is not watertight; annotation may still proceed",
            NotWatertight,
        )
    return BodySample(mesh, skeleton, params=None, refs=None)
