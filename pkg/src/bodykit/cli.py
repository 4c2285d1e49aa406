"""Single command-line entry point: bodykit <subcommand>.

Subcommands map 1:1 to the library stages: generate (full dataset
pipeline), annotate, scan, render, sample (FPS), split (k-fold),
evaluate. Every subcommand honors --seed where randomness exists; errors
exit nonzero with a machine-readable JSON line on stderr. Config files
are JSON ({"annotation": {...}, "scanner": {...}}); explicit flags win.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__, dataset, meshio, metrics, sampling, scanner
from .bodygen import import_body
from .errors import BodykitError
from .measure import (
    CSV_HEADER,
    AnnotationConfig,
    csv_row,
    measure_all,
    read_measurements_csv,
)

ENV_ROOT = "BODYKIT_DATA_ROOT"


def version_string() -> str:
    return (
        f"bodykit {__version__} (manifest={dataset.MANIFEST_VERSION}, "
        f"scan={dataset.SCAN_FORMAT_VERSION}, "
        f"measurements_csv={dataset.MEASUREMENTS_CSV_VERSION})"
    )


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    cfg = json.loads(Path(path).read_text())
    if not isinstance(cfg, dict):
        raise BodykitError(f"{path}: config must be a JSON object")
    return cfg


def _annotation_from(args, cfg: dict) -> AnnotationConfig:
    base = dict(cfg.get("annotation", {}))
    for flag, key in (
        ("scan_step", "scan_step"),
        ("tilt_deg", "tilt_deg"),
        ("waist_band", "waist_band"),
        ("side", "side"),
    ):
        v = getattr(args, flag, None)
        if v is not None:
            base[key] = v
    if getattr(args, "raw_circumference", False):
        base["use_hull"] = False
    if getattr(args, "exact_scan", False):
        base["bracketed_scan"] = False
    return AnnotationConfig.from_dict({**AnnotationConfig().to_dict(), **base})


def _scan_cfg_from(args, cfg: dict) -> dataset.ScanConfig:
    base = dict(cfg.get("scanner", {}))
    for flag, key in (
        ("views", "views"),
        ("distance", "distance"),
        ("fov_deg", "fov_deg"),
        ("noise_sigma", "noise_sigma"),
        ("image_size", "image_size"),
        ("image_frame", "image_frame"),
    ):
        v = getattr(args, flag, None)
        if v is not None:
            base[key] = v
    if getattr(args, "scan_res", None) is not None:
        base["resolution"] = [args.scan_res, args.scan_res]
    return dataset.ScanConfig.from_dict({**dataset.ScanConfig().to_dict(), **base})


def _add_annotation_flags(p):
    p.add_argument("--scan-step", dest="scan_step", type=float, help="scan step in meters at 1.7 m stature")
    p.add_argument("--tilt-deg", dest="tilt_deg", type=float, help="head/neck plane tilt about X")
    p.add_argument("--waist-band", dest="waist_band", type=float, help="waist half-height as stature fraction")
    p.add_argument("--side", choices=("left", "right"), help="side for bilateral measurements")
    p.add_argument("--raw-circumference", action="store_true", help="raw loop length instead of hull perimeter")
    p.add_argument("--exact-scan", action="store_true", help="disable bracketed junction search")


def cmd_generate(args) -> int:
    cfg = _load_config(args.config)
    out = args.out or os.environ.get(ENV_ROOT)
    if not out:
        raise BodykitError(f"--out or ${ENV_ROOT} required")
    modalities = tuple(args.modalities.split(",")) if args.modalities else dataset.ALL_MODALITIES
    manifest = dataset.build_dataset(
        out,
        count=args.count,
        seed=args.seed,
        female_fraction=args.female_fraction,
        annotation=_annotation_from(args, cfg),
        scan_cfg=_scan_cfg_from(args, cfg),
        segments=args.segments,
        jobs=args.jobs,
        modalities=modalities,
    )
    print(f"wrote {len(manifest['samples'])} samples to {out}")
    return 0


def cmd_annotate(args) -> int:
    cfg = _load_config(args.config)
    body = import_body(args.mesh, args.skeleton)
    ms = measure_all(body, _annotation_from(args, cfg))
    text = CSV_HEADER + "\n" + csv_row(args.id, ms) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _load_mesh(path: str):
    if path.endswith(".ply"):
        return meshio.read_ply_mesh(path)
    return meshio.read_obj(path)


def cmd_scan(args) -> int:
    mesh = _load_mesh(args.mesh)
    cfg = _load_config(args.config)
    sc = _scan_cfg_from(args, cfg)
    cams = scanner.two_view_rig(
        mesh, distance=sc.distance, resolution=tuple(sc.resolution), fov_deg=sc.fov_deg
    )[: sc.views]
    scans = []
    for v, cam in enumerate(cams):
        scan = scanner.depth_scan(mesh, cam)
        scan = scanner.add_noise(scan, sc.noise_sigma, seed=[args.seed, v])
        scanner.write_scan(scan, f"{args.out_prefix}_scan{v}.bscan")
        scans.append(scan)
    cloud = scanner.merge_scans(scans)
    meshio.write_ply_points(cloud, f"{args.out_prefix}_cloud.ply")
    print(f"{len(cloud)} points from {len(scans)} views -> {args.out_prefix}_cloud.ply")
    return 0


def cmd_render(args) -> int:
    mesh = _load_mesh(args.mesh)
    cfg = _load_config(args.config)
    sc = _scan_cfg_from(args, cfg)
    cam = scanner.frontal_ortho_camera(mesh, frame=sc.image_frame, size=sc.image_size)
    sil, gray = scanner.render_views(mesh, cam)
    scanner.write_pbm(sil, f"{args.out_prefix}_sil.pbm")
    scanner.write_pgm(gray, f"{args.out_prefix}_gray.pgm")
    print(f"wrote {args.out_prefix}_sil.pbm and {args.out_prefix}_gray.pgm")
    return 0


def cmd_sample(args) -> int:
    if bool(args.cloud) == bool(args.manifest):
        raise BodykitError("pass exactly one of --cloud or --manifest")
    if args.cloud:
        pts = meshio.read_ply_points(args.cloud)
        idx = sampling.farthest_point_sample(pts, args.n, seed=args.seed, jobs=args.jobs)
        meshio.write_ply_points(pts[idx], args.out)
        print(f"{args.n} of {len(pts)} points -> {args.out}")
        return 0
    manifest = dataset.load_manifest(args.manifest)
    root = Path(args.manifest).parent
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = 0
    for rec in manifest["samples"]:
        if "cloud" not in rec["files"]:
            continue
        pts = meshio.read_ply_points(root / rec["files"]["cloud"])
        idx = sampling.farthest_point_sample(pts, args.n, seed=args.seed, jobs=args.jobs)
        meshio.write_ply_points(pts[idx], out_dir / f"{rec['id']}_fps{args.n}.ply")
        written += 1
    print(f"subsampled {written} clouds to n={args.n} in {out_dir}")
    return 0


def cmd_split(args) -> int:
    manifest = dataset.load_manifest(args.manifest)
    ids = [r["id"] for r in manifest["samples"]]
    if args.no_stratify:
        folds = dataset.kfold_split(ids, k=args.k, seed=args.seed)
    else:
        genders = [r["gender"] for r in manifest["samples"]]
        folds = dataset.kfold_split_stratified(ids, genders, k=args.k, seed=args.seed)
    dataset.save_folds(folds, args.out, seed=args.seed, stratified=not args.no_stratify)
    print(f"wrote {args.k} folds to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    preds = read_measurements_csv(args.preds)
    truth = read_measurements_csv(args.truth)
    thresholds = [float(t) for t in args.thresholds.split(",")]
    if args.folds:
        folds = dataset.load_folds(args.folds)["folds"]
        fold_ids = [(str(i), f) for i, f in enumerate(folds)]
        preds_per_fold = {
            str(i): {k: preds[k] for k in f if k in preds} for i, f in enumerate(folds)
        }
        reports, agg = metrics.evaluate_folds(truth, fold_ids, preds_per_fold, thresholds)
        for r in reports:
            print(metrics.report_text(r))
            print()
        print(metrics.report_text(agg, label="=== cross-fold mean ==="))
        final = agg
    else:
        final = metrics.evaluate(preds, truth, thresholds)
        print(metrics.report_text(final))
    if args.csv_out:
        Path(args.csv_out).write_text(metrics.report_csv(final))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bodykit", description=__doc__)
    ap.add_argument("--version", action="version", version=version_string())
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="build a synthetic body dataset")
    p.add_argument("--out", help=f"dataset root (default ${ENV_ROOT})")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--female-fraction", type=float, default=0.5)
    p.add_argument("--segments", type=int, default=64, help="radial mesh resolution")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--modalities", help="comma list of mesh,skeleton,scans,cloud,images,measurements")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--views", type=int)
    p.add_argument("--distance", type=float)
    p.add_argument("--fov-deg", dest="fov_deg", type=float)
    p.add_argument("--noise-sigma", dest="noise_sigma", type=float)
    p.add_argument("--scan-res", dest="scan_res", type=int, help="scan resolution (square)")
    p.add_argument("--image-size", dest="image_size", type=int)
    p.add_argument("--image-frame", dest="image_frame", type=float)
    _add_annotation_flags(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("annotate", help="16-measurement CSV row for one body")
    p.add_argument("--mesh", required=True)
    p.add_argument("--skeleton", required=True)
    p.add_argument("--id", default="body")
    p.add_argument("--out")
    p.add_argument("--config")
    _add_annotation_flags(p)
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("scan", help="two-view depth scan and merged cloud")
    p.add_argument("--mesh", required=True)
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config")
    p.add_argument("--views", type=int)
    p.add_argument("--distance", type=float)
    p.add_argument("--fov-deg", dest="fov_deg", type=float)
    p.add_argument("--noise-sigma", dest="noise_sigma", type=float)
    p.add_argument("--scan-res", dest="scan_res", type=int)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("render", help="silhouette and gray-scale images")
    p.add_argument("--mesh", required=True)
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--config")
    p.add_argument("--image-size", dest="image_size", type=int)
    p.add_argument("--image-frame", dest="image_frame", type=float)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("sample", help="farthest point subsampling")
    p.add_argument("--cloud", help="a single PLY cloud")
    p.add_argument("--manifest", help="or: subsample every cloud of a dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", required=True, help="output PLY (or directory with --manifest)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("split", help="k-fold split of a dataset manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--no-stratify", action="store_true")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("evaluate", help="MAE / AP / mAP report")
    p.add_argument("--preds", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--folds")
    p.add_argument("--thresholds", default="10,20")
    p.add_argument("--csv-out")
    p.set_defaults(func=cmd_evaluate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BodykitError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 3
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
