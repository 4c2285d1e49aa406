"""Dataset assembly, manifests and k-fold splitting.

Layout under the dataset root ({split} defaults to "all"):

    {split}/{gender}/{id:06}_mesh.obj        triangle mesh
    {split}/{gender}/{id:06}_skeleton.json   joint map
    {split}/{gender}/{id:06}_scan{v}.bscan   structured scans, one per view
    {split}/{gender}/{id:06}_cloud.ply       merged unorganized cloud
    {split}/{gender}/{id:06}_sil.pbm         binary silhouette, image_size^2
    {split}/{gender}/{id:06}_gray.pgm        gray-scale render
    {split}/{gender}/{id:06}_meas.csv        one-sample measurement row
    {split}/{gender}/{id:06}_meta.json       params + cloud transform (marker)
    measurements.csv                          all samples, Table-1 column order
    manifest.json

A sample whose files all exist is skipped on rerun; files are only
rewritten when their content changes, so a completed build is idempotent.
"""
from __future__ import annotations

import dataclasses
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import meshio, scanner
from .bodygen import BodyParams, generate_body, population_params
from .errors import BodykitError, TooFewSamples
from .measure import CSV_HEADER, AnnotationConfig, MeasurementSet, csv_row, measure_all
from .sampling import cloud_transform

MANIFEST_VERSION = 1
SCAN_FORMAT_VERSION = 1
MEASUREMENTS_CSV_VERSION = 1

ALL_MODALITIES = ("mesh", "skeleton", "scans", "cloud", "images", "measurements")


@dataclasses.dataclass(frozen=True)
class ScanConfig:
    """Virtual scanner configuration recorded in the manifest."""

    views: int = 2
    distance: float = 3.0
    resolution: tuple = (200, 200)
    fov_deg: float = 65.0
    noise_sigma: float = 0.002
    image_size: int = 200
    image_frame: float = 2.6

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["resolution"] = list(self.resolution)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScanConfig":
        d = dict(d)
        if "resolution" in d:
            d["resolution"] = tuple(d["resolution"])
        return cls(**d)


def _write_if_changed(path: Path, data: bytes) -> bool:
    if path.exists() and path.read_bytes() == data:
        return False
    path.write_bytes(data)
    return True


def _sample_paths(root: Path, split: str, gender: str, sid: str, scan_cfg: ScanConfig,
                  modalities) -> dict:
    base = Path(split) / gender / sid
    files = {}
    if "mesh" in modalities:
        files["mesh"] = str(base) + "_mesh.obj"
    if "skeleton" in modalities:
        files["skeleton"] = str(base) + "_skeleton.json"
    if "scans" in modalities:
        for v in range(scan_cfg.views):
            files[f"scan{v}"] = str(base) + f"_scan{v}.bscan"
    if "cloud" in modalities:
        files["cloud"] = str(base) + "_cloud.ply"
    if "images" in modalities:
        files["silhouette"] = str(base) + "_sil.pbm"
        files["grayscale"] = str(base) + "_gray.pgm"
    if "measurements" in modalities:
        files["measurements"] = str(base) + "_meas.csv"
    files["meta"] = str(base) + "_meta.json"
    return files


def build_sample(root: Path, sid: str, params: BodyParams, annotation: AnnotationConfig,
                 scan_cfg: ScanConfig, segments: int, seed: int, split: str,
                 modalities=ALL_MODALITIES) -> dict:
    """Generates, annotates, scans and renders one body; returns its record."""
    files = _sample_paths(root, split, params.gender, sid, scan_cfg, modalities)
    meta_path = root / files["meta"]
    if all((root / p).exists() for p in files.values()):
        return json.loads(meta_path.read_text())

    (root / split / params.gender).mkdir(parents=True, exist_ok=True)
    body = generate_body(params, segments=segments)
    record = {
        "id": sid,
        "gender": params.gender,
        "files": files,
        "params": dataclasses.asdict(params),
        "partial": sorted(set(ALL_MODALITIES) - set(modalities)),
    }

    if "mesh" in modalities:
        meshio.write_obj(body.mesh, root / files["mesh"])
    if "skeleton" in modalities:
        meshio.write_skeleton_json(body.skeleton, root / files["skeleton"])
    if "measurements" in modalities:
        ms = measure_all(body, annotation)
        bad = ms.violations()
        if bad:
            raise BodykitError(f"sample {sid}: measurement sanity violations {bad}")
        (root / files["measurements"]).write_text(CSV_HEADER + "\n" + csv_row(sid, ms) + "\n")

    cloud = None
    if "scans" in modalities or "cloud" in modalities:
        cams = scanner.two_view_rig(
            body.mesh, distance=scan_cfg.distance,
            resolution=tuple(scan_cfg.resolution), fov_deg=scan_cfg.fov_deg,
        )[: scan_cfg.views]
        scans = []
        for v, cam in enumerate(cams):
            scan = scanner.depth_scan(body.mesh, cam)
            scan = scanner.add_noise(scan, scan_cfg.noise_sigma, seed=[seed, int(sid), v])
            scans.append(scan)
            if "scans" in modalities:
                scanner.write_scan(scan, root / files[f"scan{v}"])
        if "cloud" in modalities:
            cloud = scanner.merge_scans(scans)
            meshio.write_ply_points(cloud, root / files["cloud"])

    if "images" in modalities:
        cam = scanner.frontal_ortho_camera(
            body.mesh, frame=scan_cfg.image_frame, size=scan_cfg.image_size
        )
        sil, gray = scanner.render_views(body.mesh, cam)
        scanner.write_pbm(sil, root / files["silhouette"])
        scanner.write_pgm(gray, root / files["grayscale"])

    if cloud is not None and len(cloud):
        record["cloud_normalization"] = cloud_transform(cloud).to_dict()
    meta_path.write_text(json.dumps(record, indent=1, sort_keys=True) + "\n")
    return record


def _build_sample_star(args):
    return build_sample(*args)


def build_dataset(out_dir, count: int, seed: int = 0, female_fraction: float = 0.5,
                  annotation: AnnotationConfig | None = None,
                  scan_cfg: ScanConfig | None = None, segments: int = 64,
                  jobs: int = 1, modalities=ALL_MODALITIES, split: str = "all",
                  log=lambda msg: print(msg, file=sys.stderr)) -> dict:
    """Full generate -> annotate -> scan -> render pipeline; returns the manifest.

    Per-sample failures are logged and skipped; the build fails when more
    than 1% of samples fail. Reruns skip completed samples and leave
    identical files untouched.
    """
    annotation = annotation or AnnotationConfig()
    scan_cfg = scan_cfg or ScanConfig()
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    params = population_params(count, female_fraction, seed)
    tasks = [
        (root, f"{i:06d}", p, annotation, scan_cfg, segments, seed, split, tuple(modalities))
        for i, p in enumerate(params)
    ]

    records = []
    failures = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {pool.submit(_build_sample_star, t): t[1] for t in tasks}
            for fut, sid in futures.items():
                try:
                    records.append(fut.result())
                except Exception as exc:
                    failures.append((sid, repr(exc)))
                    log(f"sample {sid} failed: {exc!r}")
    else:
        for task in tasks:
            try:
                records.append(build_sample(*task))
            except Exception as exc:
                failures.append((task[1], repr(exc)))
                log(f"sample {task[1]} failed: {exc!r}")
    if len(failures) > 0.01 * count:
        raise BodykitError(f"{len(failures)}/{count} samples failed: {failures[:5]}")

    records.sort(key=lambda r: r["id"])
    if "measurements" in modalities:
        lines = [CSV_HEADER]
        for rec in records:
            row = (root / rec["files"]["measurements"]).read_text().strip().splitlines()[1]
            lines.append(row)
        _write_if_changed(root / "measurements.csv", ("\n".join(lines) + "\n").encode())

    manifest = {
        "format_version": MANIFEST_VERSION,
        "versions": {
            "manifest": MANIFEST_VERSION,
            "scan_format": SCAN_FORMAT_VERSION,
            "measurements_csv": MEASUREMENTS_CSV_VERSION,
        },
        "seed": seed,
        "count": count,
        "female_fraction": female_fraction,
        "segments": segments,
        "split": split,
        "annotation": annotation.to_dict(),
        "scanner": scan_cfg.to_dict(),
        "modalities": sorted(modalities),
        "measurements_csv": "measurements.csv" if "measurements" in modalities else None,
        "image_normalization": None,  # filled by training pipelines (train split stats)
        "samples": records,
    }
    data = (json.dumps(manifest, indent=1, sort_keys=True) + "\n").encode()
    _write_if_changed(root / "manifest.json", data)
    return manifest


def load_manifest(path) -> dict:
    path = Path(path)
    manifest = json.loads(path.read_text())
    version = manifest.get("format_version")
    if version != MANIFEST_VERSION:
        raise BodykitError(f"{path}: unsupported manifest version {version!r}")
    missing = []
    root = path.parent
    for rec in manifest["samples"]:
        for key, rel in rec["files"].items():
            if not (root / rel).exists():
                missing.append(rel)
    if missing:
        raise BodykitError(f"{path}: {len(missing)} referenced files missing, e.g. {missing[:3]}")
    ids = [r["id"] for r in manifest["samples"]]
    if len(ids) != len(set(ids)):
        raise BodykitError(f"{path}: duplicate sample ids")
    return manifest


# ---------------------------------------------------------------------------
# k-fold splitting


def kfold_split(ids, k: int = 5, seed: int = 0) -> list[list]:
    """Seeded shuffle, then contiguous partition into k test folds."""
    ids = list(ids)
    if k < 2:
        raise TooFewSamples("k must be >= 2")
    if len(ids) < k:
        raise TooFewSamples(f"{len(ids)} samples cannot make {k} folds")
    order = np.random.default_rng(seed).permutation(len(ids))
    shuffled = [ids[i] for i in order]
    sizes = [len(ids) // k + (1 if i < len(ids) % k else 0) for i in range(k)]
    folds = []
    pos = 0
    for s in sizes:
        folds.append(shuffled[pos : pos + s])
        pos += s
    return folds


def kfold_split_stratified(ids, genders, k: int = 5, seed: int = 0) -> list[list]:
    """Gender-balanced folds: per-gender shuffles dealt round-robin."""
    ids = list(ids)
    if k < 2:
        raise TooFewSamples("k must be >= 2")
    if len(ids) < k:
        raise TooFewSamples(f"{len(ids)} samples cannot make {k} folds")
    rng = np.random.default_rng(seed)
    stream = []
    for g in sorted(set(genders)):
        group = [i for i, gg in zip(ids, genders) if gg == g]
        order = rng.permutation(len(group))
        stream.extend(group[i] for i in order)
    folds = [stream[i::k] for i in range(k)]
    return folds


def save_folds(folds, path, seed: int, stratified: bool) -> None:
    data = {
        "format_version": MANIFEST_VERSION,
        "k": len(folds),
        "seed": seed,
        "stratified": stratified,
        "folds": folds,
    }
    Path(path).write_text(json.dumps(data, indent=1, sort_keys=True) + "\n")


def load_folds(path) -> dict:
    data = json.loads(Path(path).read_text())
    if data.get("format_version") != MANIFEST_VERSION:
        raise BodykitError(f"{path}: unsupported folds version")
    return data
