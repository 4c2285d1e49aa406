"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the PASS lines
live. The two bulk criteria (1000-body sweep, 200-body end-to-end build)
use a small process pool and respect their stated wall-clock budgets.
"""
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import pytest

from bodykit.bodygen import BodyParams, BodySample, generate_body, population_params
from bodykit.cli import main as cli_main
from bodykit.hull import hull_perimeter_2d
from bodykit.measure import (
    AnnotationConfig,
    MEASUREMENT_NAMES,
    MeasurementContext,
    detect_axilla,
    inner_leg_length,
    measure_all,
    read_measurements_csv,
)
from bodykit.mesh import make_cylinder, rotation_about_y
from bodykit.metrics import PUBLISHED_REFERENCE_MAE_MM, ap_at, map_at, report_text, evaluate
from bodykit.sampling import farthest_point_sample
from bodykit.slicing import YLevelScanner

JOBS = max(1, min(4, os.cpu_count() or 1))
CFG = AnnotationConfig()


def ok(msg):
    print(f"[PASS] {msg}", flush=True)


# --- workers for the process pool (top level so they pickle) ---------------


def _sweep_worker(seeds):
    errors = []
    for seed in seeds:
        for params in population_params(1, seed=seed):
            body = generate_body(params)
            ms = measure_all(body, CFG)
            if not (ms.values > 0).all():
                errors.append((seed, "non-positive measurement"))
                continue
            n = body.refs.segments
            for name in ("bicep", "wrist", "thigh", "knee"):
                r = body.refs.radii[name]
                smooth = 2 * math.pi * r * 1000.0
                bound = (2 * math.pi * r - 2 * n * r * math.sin(math.pi / n)) * 1000.0
                if abs(ms[f"{name}_circumference"] - smooth) > bound + 0.005 * smooth:
                    errors.append((seed, name))
    return errors


def _junction_worker(seeds):
    errors = []
    for seed in seeds:
        for params in population_params(1, seed=seed):
            body = generate_body(params)
            ctx = MeasurementContext(body, CFG)
            ax = detect_axilla(ctx)
            if abs(ax - body.refs.axilla_y) > ctx.step:
                errors.append((seed, "axilla", ax - body.refs.axilla_y))
            crotch = inner_leg_length(ctx) / 1000.0 + ctx.joint("ankle")[1]
            if abs(crotch - body.refs.crotch_y) > ctx.step:
                errors.append((seed, "crotch", crotch - body.refs.crotch_y))
    return errors


def _chunks(items, n):
    size = (len(items) + n - 1) // n
    return [items[i : i + size] for i in range(0, len(items), size)]


# --- criteria ---------------------------------------------------------------


def test_cylinder_circumference_oracle():
    t0 = time.time()
    n, r = 256, 0.1
    cyl = make_cylinder(radius=r, height=1.0, segments=n)
    scan = YLevelScanner(cyl)
    levels = np.linspace(-0.2, 0.2, 81)  # waist-style: min over scanned band
    perims = []
    for y in levels:
        loops = scan.loops_at(float(y))
        perims.append(min(loops.hull_perimeter(i) for i in range(loops.count)))
    waist = min(perims)
    polygon = 2 * n * r * math.sin(math.pi / n)
    smooth = 2 * math.pi * r
    elapsed = time.time() - t0
    assert abs(waist - polygon) / polygon < 0.001
    assert abs(waist - smooth) / smooth < 0.005
    assert elapsed < 1.0
    ok(
        f"cylinder oracle: waist scan {waist:.6f} m vs polygon {polygon:.6f} m, "
        f"2*pi*r {smooth:.6f} m, {elapsed:.2f} s"
    )


def test_procedural_body_oracle_sweep_1000():
    t0 = time.time()
    seeds = list(range(1000))
    with ProcessPoolExecutor(max_workers=JOBS) as pool:
        results = list(pool.map(_sweep_worker, _chunks(seeds, JOBS * 8)))
    errors = [e for chunk in results for e in chunk]
    elapsed = time.time() - t0
    assert errors == [], errors[:10]
    assert elapsed < 300.0, f"sweep took {elapsed:.0f} s"
    ok(f"1000-body sweep: limb circumferences within bound + 0.5%, all positive, {elapsed:.0f} s")


def test_crotch_axilla_detection_100_seeds():
    seeds = list(range(100))
    with ProcessPoolExecutor(max_workers=JOBS) as pool:
        results = list(pool.map(_junction_worker, _chunks(seeds, JOBS * 4)))
    errors = [e for chunk in results for e in chunk]
    assert errors == [], errors[:10]
    ok("crotch/axilla: detected within one scan step of construction junctions, 100 seeds")


def test_rigid_invariance_and_scale_equivariance():
    body = generate_body(BodyParams(gender="male", seed=42))
    base = measure_all(body, CFG)
    rng = np.random.default_rng(7)
    worst_rigid = 0.0
    worst_scale = 0.0
    for _ in range(25):
        rot = rotation_about_y(rng.uniform(0, 2 * np.pi))
        tr = rng.normal(scale=2.0, size=3)
        moved = BodySample(
            body.mesh.transformed(rotation=rot, translation=tr),
            body.skeleton.transformed(rotation=rot, translation=tr),
        )
        ms = measure_all(moved, CFG)
        worst_rigid = max(worst_rigid, float(np.abs(ms.values - base.values).max()))
    for _ in range(25):
        s = float(rng.uniform(0.8, 1.2))
        scaled = BodySample(
            body.mesh.transformed(scale=s), body.skeleton.transformed(scale=s)
        )
        ms = measure_all(scaled, CFG)
        worst_scale = max(
            worst_scale, float(np.max(np.abs(ms.values - s * base.values) / (s * base.values)))
        )
    assert worst_rigid < 1e-6
    assert worst_scale < 1e-6
    ok(
        f"invariance: 25 rigid transforms (max {worst_rigid:.2e} mm) and "
        f"25 scales (max rel {worst_scale:.2e})"
    )


def test_metrics_fixtures_and_monotonicity():
    # hand-computed fixtures
    truth4 = {}
    preds4 = {}
    for i, e in enumerate([5.0, 9.0, 15.0, 25.0]):
        truth4[str(i)] = np.full(16, 500.0)
        preds4[str(i)] = truth4[str(i)].copy()
        preds4[str(i)][0] += e
    assert ap_at(preds4, truth4, 20.0)[MEASUREMENT_NAMES[0]] == 75.0
    assert ap_at(preds4, truth4, 10.0)[MEASUREMENT_NAMES[0]] == 50.0

    truth2 = {"a": np.full(16, 500.0), "b": np.full(16, 500.0)}
    preds2 = {"a": truth2["a"].copy(), "b": truth2["b"] + 25.0}
    preds2["a"][0] += 8.0 * 16.0
    assert map_at(preds2, truth2, 20.0) == 50.0

    rng = np.random.default_rng(123)
    for _ in range(1000):
        n = int(rng.integers(2, 12))
        truth = {str(i): rng.uniform(100, 900, size=16) for i in range(n)}
        preds = {k: v + rng.normal(0, 12, size=16) for k, v in truth.items()}
        t1, t2 = sorted(rng.uniform(1, 40, size=2))
        name = MEASUREMENT_NAMES[int(rng.integers(16))]
        assert ap_at(preds, truth, t1)[name] <= ap_at(preds, truth, t2)[name]
        assert map_at(preds, truth, t1) <= map_at(preds, truth, t2)
    ok("metrics: exact AP/mAP fixtures and 1000-trial monotonicity")


def test_fps_property_and_jobs_determinism():
    rng = np.random.default_rng(0)

    def min_pairwise(pts):
        d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
        np.fill_diagonal(d, np.inf)
        return d.min()

    for seed in range(100):
        pts = np.random.default_rng([1, seed]).uniform(size=(100, 3))
        sel = farthest_point_sample(pts, 12)
        fps_min = min_pairwise(pts[sel])
        sub = np.random.default_rng([2, seed]).choice(100, size=12, replace=False)
        assert fps_min >= min_pairwise(pts[sub])

    pts = rng.normal(size=(500, 3))
    base = farthest_point_sample(pts, 64, jobs=1)
    for jobs in range(2, 9):
        assert np.array_equal(farthest_point_sample(pts, 64, jobs=jobs), base)
    ok("FPS: min-distance beats random subsets for 100 seeds; identical for jobs 1..8")


def test_end_to_end_desk_dataset(tmp_path):
    t0 = time.time()
    out = tmp_path / "desk"
    rc = cli_main(
        [
            "generate", "--count", "200", "--seed", "11", "--out", str(out),
            "--jobs", str(JOBS),
        ]
    )
    assert rc == 0
    elapsed = time.time() - t0
    assert elapsed < 900.0, f"build took {elapsed:.0f} s"

    manifest = json.loads((out / "manifest.json").read_text())
    assert len(manifest["samples"]) == 200
    for rec in manifest["samples"]:
        assert rec["partial"] == []
        for key in ("mesh", "skeleton", "scan0", "scan1", "cloud", "silhouette",
                    "grayscale", "measurements"):
            assert (out / rec["files"][key]).exists()
    rows = read_measurements_csv(out / "measurements.csv")
    assert len(rows) == 200
    assert all((ms.values > 0).all() for ms in rows.values())

    folds_path = tmp_path / "folds.json"
    rc = cli_main(
        ["split", "--manifest", str(out / "manifest.json"), "--k", "5",
         "--seed", "3", "--out", str(folds_path)]
    )
    assert rc == 0
    folds = json.loads(folds_path.read_text())["folds"]
    all_ids = sorted(x for f in folds for x in f)
    assert all_ids == sorted(r["id"] for r in manifest["samples"])
    assert len(set(all_ids)) == 200
    for f in folds:
        assert abs(len(f) - 40) <= 1  # 20% of 200, within one sample
    gender_of = {r["id"]: r["gender"] for r in manifest["samples"]}
    for f in folds:
        females = sum(1 for x in f if gender_of[x] == "female")
        assert abs(females - len(f) / 2) <= 1
    ok(f"end-to-end: 200-sample dataset with all modalities in {elapsed:.0f} s; 5-fold split valid")


def test_paper_reference_numbers_are_recorded_not_reproduced():
    assert PUBLISHED_REFERENCE_MAE_MM == {
        "conv_grayscale": 4.64,
        "conv_binary": 7.60,
        "pointcloud_512": 5.29,
        "pointcloud_1024": 4.95,
    }
    truth = {"a": np.full(16, 500.0)}
    preds = {"a": np.full(16, 503.0)}
    rep = evaluate(preds, truth)
    text = report_text(rep)
    # the published accuracies appear only as labeled reference constants
    assert "Published reference" in text
    assert "not a" in text and "desk-scale target" in text
    assert rep.mean_mae == pytest.approx(3.0)
    ok("paper numbers: 4.64/7.60/5.29/4.95 mm recorded as reference constants only")
