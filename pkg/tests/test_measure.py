"""Measurement pipeline tests against construction oracles."""
import math

import numpy as np
import pytest

from bodykit.bodygen import BodyParams, BodySample, generate_body
from bodykit.errors import CrotchNotFound, MeasurementError, NoSection
from bodykit.measure import (
    AnnotationConfig,
    MEASUREMENT_NAMES,
    MeasurementContext,
    MeasurementSet,
    REFERENCE_STATURE,
    detect_axilla,
    inner_leg_length,
    measure_all,
    read_measurements_csv,
    write_measurements_csv,
    _levels,
    _select_nearest,
)
from bodykit.mesh import Skeleton, make_cylinder, rotation_about_y


CFG = AnnotationConfig()


@pytest.fixture(scope="module")
def body():
    return generate_body(BodyParams(gender="female", seed=7))


@pytest.fixture(scope="module")
def measured(body):
    return measure_all(body, CFG)


def ellipse_perimeter(a, b, n=200_000):
    theta = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    return float(np.sqrt((a * np.sin(theta)) ** 2 + (b * np.cos(theta)) ** 2).sum()
                 * 2.0 * np.pi / n)


def superellipse_polygon_perimeter(rx, rz, exponent, n):
    theta = 2.0 * np.pi * np.arange(n) / n
    e = 2.0 / exponent
    x = rx * np.sign(np.cos(theta)) * np.abs(np.cos(theta)) ** e
    z = rz * np.sign(np.sin(theta)) * np.abs(np.sin(theta)) ** e
    pts = np.stack([x, z], axis=1)
    return float(np.linalg.norm(np.diff(np.vstack([pts, pts[:1]]), axis=0), axis=1).sum())


def polygonization_bound_mm(r, n):
    return (2 * math.pi * r - 2 * n * r * math.sin(math.pi / n)) * 1000.0


class TestLimbOracles:
    def test_limb_circumferences_match_construction(self, body, measured):
        n = body.refs.segments
        for name in ("bicep", "wrist", "thigh", "knee"):
            r = body.refs.radii[name]
            smooth = 2 * math.pi * r * 1000.0
            got = measured[f"{name}_circumference"]
            assert abs(got - smooth) <= polygonization_bound_mm(r, n) + 0.005 * smooth

    def test_neck_matches_construction_at_zero_tilt(self, body):
        ms = measure_all(body, AnnotationConfig(tilt_deg=0.0))
        r = body.refs.radii["neck"]
        smooth = 2 * math.pi * r * 1000.0
        n = body.refs.segments
        assert abs(ms["neck_circumference"] - smooth) <= polygonization_bound_mm(r, n) + 0.005 * smooth

    def test_head_matches_ellipse_slice_at_zero_tilt(self, body):
        ms = measure_all(body, AnnotationConfig(tilt_deg=0.0))
        a, b, c = body.refs.head_semi_axes
        top = body.refs.stature
        hj_y = body.skeleton["head"][1]
        dy = 0.5 * (hj_y + top) - body.refs.head_center_y
        shrink = math.sqrt(max(0.0, 1.0 - (dy / b) ** 2))
        expect = ellipse_perimeter(a * shrink, c * shrink) * 1000.0
        assert ms["head_circumference"] == pytest.approx(expect, rel=0.01)

    def test_tilt_changes_result_deterministically(self, body):
        m0 = measure_all(body, AnnotationConfig(tilt_deg=0.0))
        m15 = measure_all(body, AnnotationConfig(tilt_deg=15.0))
        m15b = measure_all(body, AnnotationConfig(tilt_deg=15.0))
        assert m15 == m15b
        assert m0["head_circumference"] != m15["head_circumference"]


class TestTorsoOracles:
    def _profile_route(self, body, lo, hi, step, mode):
        levels = _levels(lo, hi, step)
        r = body.refs
        perims = []
        for y in levels:
            rx = float(np.interp(y, r.torso_levels, r.torso_rx))
            rz = float(np.interp(y, r.torso_levels, r.torso_rz))
            perims.append(superellipse_polygon_perimeter(rx, rz, r.torso_exponent, r.segments))
        return (max(perims) if mode == "max" else min(perims)) * 1000.0

    def test_waist_matches_profile_route(self, body, measured):
        ctx = MeasurementContext(body, CFG)
        mid = body.skeleton["mid_spine"][1]
        half = CFG.waist_band * body.refs.stature
        expect = self._profile_route(body, mid - half, mid + half, ctx.step, "min")
        assert measured["waist_circumference"] == pytest.approx(expect, rel=0.005)

    def test_pelvis_matches_profile_route(self, body, measured):
        ctx = MeasurementContext(body, CFG)
        expect = self._profile_route(
            body, body.skeleton["left_hip"][1], body.skeleton["pelvis"][1], ctx.step, "max"
        )
        assert measured["pelvis_circumference"] == pytest.approx(expect, rel=0.005)

    def test_chest_matches_profile_route(self, body, measured):
        ctx = MeasurementContext(body, CFG)
        ax = detect_axilla(ctx)
        expect = self._profile_route(
            body, body.skeleton["upper_spine"][1], ax, ctx.step, "max"
        )
        assert measured["chest_circumference"] == pytest.approx(expect, rel=0.005)

    def test_step_halving_bounded_by_profile_lipschitz(self, body):
        r = body.refs
        perims = np.array(
            [
                superellipse_polygon_perimeter(rx, rz, r.torso_exponent, r.segments)
                for rx, rz in zip(r.torso_rx, r.torso_rz)
            ]
        )
        lips = np.max(np.abs(np.diff(perims) / np.diff(r.torso_levels)))
        w1 = measure_all(body, AnnotationConfig(scan_step=0.001))["waist_circumference"]
        w2 = measure_all(body, AnnotationConfig(scan_step=0.0005))["waist_circumference"]
        step_eff = 0.001 * r.stature / REFERENCE_STATURE
        assert abs(w1 - w2) <= lips * step_eff * 1000.0 + 1e-6


class TestJunctions:
    @pytest.mark.parametrize("seed", [0, 3, 11])
    def test_axilla_within_one_step(self, seed):
        body = generate_body(BodyParams(gender="male", seed=seed))
        ctx = MeasurementContext(body, CFG)
        assert abs(detect_axilla(ctx) - body.refs.axilla_y) <= ctx.step

    @pytest.mark.parametrize("seed", [0, 3, 11])
    def test_crotch_within_one_step(self, seed):
        body = generate_body(BodyParams(gender="female", seed=seed))
        ctx = MeasurementContext(body, CFG)
        crotch = inner_leg_length(ctx) / 1000.0 + body.skeleton["left_ankle"][1]
        assert abs(crotch - body.refs.crotch_y) <= ctx.step

    def test_bracketed_equals_exact_scan(self, body):
        fast = measure_all(body, AnnotationConfig(bracketed_scan=True))
        slow = measure_all(body, AnnotationConfig(bracketed_scan=False))
        assert fast == slow

    def test_merged_legs_raise_crotch_not_found(self):
        mesh = make_cylinder(radius=0.3, height=1.6, segments=32, center=(0.0, 0.8, 0.0))
        joints = {
            "head": [0, 1.55, 0], "neck": [0, 1.4, 0], "upper_spine": [0, 1.2, 0],
            "mid_spine": [0, 1.05, 0], "pelvis": [0, 0.95, 0],
        }
        for side, s in (("left", 1.0), ("right", -1.0)):
            joints[f"{side}_shoulder"] = [s * 0.15, 1.35, 0]
            joints[f"{side}_elbow"] = [s * 0.25, 1.35, 0]
            joints[f"{side}_wrist"] = [s * 0.28, 1.35, 0]
            joints[f"{side}_hip"] = [s * 0.08, 0.85, 0]
            joints[f"{side}_knee"] = [s * 0.08, 0.45, 0]
            joints[f"{side}_ankle"] = [s * 0.08, 0.1, 0]
        sample = BodySample(mesh, Skeleton(joints))
        ctx = MeasurementContext(sample, CFG)
        with pytest.raises(CrotchNotFound):
            inner_leg_length(ctx)


class TestInvariance:
    def test_rigid_invariance(self, body, measured):
        rng = np.random.default_rng(5)
        for _ in range(3):
            rot = rotation_about_y(rng.uniform(0, 2 * np.pi))
            tr = rng.normal(size=3)
            moved = BodySample(
                body.mesh.transformed(rotation=rot, translation=tr),
                body.skeleton.transformed(rotation=rot, translation=tr),
                body.params,
            )
            ms = measure_all(moved, CFG)
            assert np.abs(ms.values - measured.values).max() < 1e-6

    def test_scale_equivariance(self, body, measured):
        for s in (0.8, 1.1):
            scaled = BodySample(
                body.mesh.transformed(scale=s),
                body.skeleton.transformed(scale=s),
                body.params,
            )
            ms = measure_all(scaled, CFG)
            rel = np.abs(ms.values - s * measured.values) / (s * measured.values)
            assert rel.max() < 1e-6

    def test_translation_only(self, body, measured):
        moved = BodySample(
            body.mesh.transformed(translation=(2.0, -1.0, 0.5)),
            body.skeleton.transformed(translation=(2.0, -1.0, 0.5)),
            body.params,
        )
        ms = measure_all(moved, CFG)
        assert np.abs(ms.values - measured.values).max() < 1e-6


class TestSelectionAndErrors:
    def test_thigh_picks_left_leg(self, body):
        ctx = MeasurementContext(body, CFG)
        hip, knee = ctx.joint("hip"), ctx.joint("knee")
        loops = ctx.scanner().loops_at(0.5 * (hip[1] + knee[1]))
        assert loops.count == 2
        pick = _select_nearest(loops.centroids, hip, knee)
        assert loops.centroids[pick][0] > 0  # left leg sits at +X

    def test_right_side_config(self, body):
        left = measure_all(body, AnnotationConfig(side="left"))
        right = measure_all(body, AnnotationConfig(side="right"))
        # the generated body is bilaterally symmetric
        assert np.abs(left.values - right.values).max() < 1e-6

    def test_no_section_error(self, body):
        sk = {k: v.tolist() for k, v in body.skeleton.joints.items()}
        sk["left_wrist"] = [5.0, sk["left_wrist"][1], 0.0]
        broken = BodySample(body.mesh, Skeleton(sk))
        with pytest.raises(MeasurementError) as exc:
            measure_all(broken, CFG)
        assert exc.value.measurement == "wrist_circumference"
        assert isinstance(exc.value.cause, NoSection)

    def test_joint_distance_values(self, body, measured):
        sk = body.skeleton
        expect = np.linalg.norm(sk["left_shoulder"] - sk["left_wrist"]) * 1000
        assert measured["shoulder_to_wrist"] == pytest.approx(expect, abs=1e-9)
        expect = np.linalg.norm(sk["neck"] - sk["pelvis"]) * 1000
        assert measured["torso_length"] == pytest.approx(expect, abs=1e-9)

    def test_all_positive_and_sane(self, measured):
        assert measured.violations() == []
        assert (measured.values > 0).all()

    def test_waist_below_chest_and_pelvis(self, measured):
        # the generated torso profile attains its minimum inside the waist band
        assert measured["waist_circumference"] <= measured["chest_circumference"]
        assert measured["waist_circumference"] <= measured["pelvis_circumference"]

    def test_violations_flag_degenerate_values(self, measured):
        vals = measured.values.copy()
        vals[MEASUREMENT_NAMES.index("calf_length")] = 0.0
        assert MeasurementSet(vals).violations()


class TestCsv:
    def test_round_trip_at_3_decimals(self, tmp_path, measured):
        path = tmp_path / "m.csv"
        write_measurements_csv(path, {"000001": measured, "000000": measured})
        back = read_measurements_csv(path)
        assert list(back) == ["000000", "000001"]
        assert np.abs(back["000000"].values - measured.values).max() <= 0.0005 + 1e-12
