"""Readers for the dataset formats the generator toolkit emits.

This package talks to the generator only through its published file
formats (manifest JSON, measurements CSV, binary PLY clouds, PGM/PBM
images) and its CLI, so the formats are parsed here independently.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

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

CSV_HEADER = "id," + ",".join(MEASUREMENT_NAMES)

MANIFEST_VERSION = 1


def read_manifest(path) -> dict:
    path = Path(path)
    manifest = json.loads(path.read_text())
    if manifest.get("format_version") != MANIFEST_VERSION:
        raise ValueError(f"{path}: unsupported manifest version")
    return manifest


def read_measurements_csv(path) -> dict:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if lines[0].split(",") != CSV_HEADER.split(","):
        raise ValueError(f"{path}: unexpected CSV header")
    out = {}
    for ln in lines[1:]:
        parts = ln.split(",")
        out[parts[0]] = np.asarray([float(x) for x in parts[1:]], dtype=np.float64)
    return out


def write_predictions_csv(path, ids, values_mm: np.ndarray) -> None:
    values_mm = np.asarray(values_mm, dtype=np.float64)
    if values_mm.shape != (len(ids), 16):
        raise ValueError(f"predictions must be (n, 16), got {values_mm.shape}")
    lines = [CSV_HEADER]
    for sid, row in zip(ids, values_mm):
        lines.append(str(sid) + "," + ",".join(f"{v:.3f}" for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def _pnm_fields(data: bytes, magic: bytes, count: int):
    if not data.startswith(magic):
        raise ValueError(f"not a {magic.decode()} file")
    fields, pos = [], 2
    while len(fields) < count:
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
    return fields, pos + 1


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    (w, h, maxval), pos = _pnm_fields(data, b"P5", 3)
    px = np.frombuffer(data[pos : pos + w * h], dtype=np.uint8).reshape(h, w)
    return px.astype(np.float64) / float(maxval)


def read_pbm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    (w, h), pos = _pnm_fields(data, b"P4", 2)
    row_bytes = (w + 7) // 8
    raw = np.frombuffer(data[pos : pos + row_bytes * h], dtype=np.uint8).reshape(h, row_bytes)
    return np.unpackbits(raw, axis=1)[:, :w].astype(np.float64)


_PLY_SIZES = {"char": "i1", "uchar": "u1", "short": "i2", "ushort": "u2",
              "int": "i4", "uint": "u4", "float": "f4", "double": "f8",
              "int8": "i1", "uint8": "u1", "int16": "i2", "uint16": "u2",
              "int32": "i4", "uint32": "u4", "float32": "f4", "float64": "f8"}


def read_ply_points(path) -> np.ndarray:
    with open(path, "rb") as f:
        if f.readline().strip() != b"ply":
            raise ValueError(f"{path}: not a PLY file")
        fmt = None
        count = 0
        props = []
        in_vertex = False
        while True:
            parts = f.readline().decode("ascii").split()
            if not parts:
                continue
            if parts[0] == "format":
                fmt = parts[1]
            elif parts[0] == "element":
                if parts[1] == "vertex":
                    count = int(parts[2])
                    in_vertex = True
                else:
                    in_vertex = False
            elif parts[0] == "property" and parts[1] != "list" and in_vertex:
                props.append((parts[2], "<" + _PLY_SIZES[parts[1]]))
            elif parts[0] == "end_header":
                break
        if fmt != "binary_little_endian":
            raise ValueError(f"{path}: only binary little-endian PLY supported")
        dtype = np.dtype(props)
        rec = np.frombuffer(f.read(dtype.itemsize * count), dtype=dtype)
    return np.stack([rec["x"], rec["y"], rec["z"]], axis=1).astype(np.float64)


# ---------------------------------------------------------------------------
# dataset assembly for training


def load_images(manifest_path, kind: str = "grayscale"):
    """(ids, (n, h, w) stack) for 'grayscale' or 'silhouette' images."""
    manifest = read_manifest(manifest_path)
    root = Path(manifest_path).parent
    reader = read_pgm if kind == "grayscale" else read_pbm
    ids, images = [], []
    for rec in manifest["samples"]:
        ids.append(rec["id"])
        images.append(reader(root / rec["files"][kind]))
    return ids, np.stack(images)


def load_clouds(manifest_path, fps_dir=None, n_points: int | None = None):
    """(ids, list of (k, 3) clouds); fps_dir points at pre-subsampled PLYs
    named <id>_fps<n>.ply as written by the generator CLI."""
    manifest = read_manifest(manifest_path)
    root = Path(manifest_path).parent
    ids, clouds = [], []
    for rec in manifest["samples"]:
        ids.append(rec["id"])
        if fps_dir is not None:
            clouds.append(read_ply_points(Path(fps_dir) / f"{rec['id']}_fps{n_points}.ply"))
        else:
            clouds.append(read_ply_points(root / rec["files"]["cloud"]))
    return ids, clouds


def load_targets(manifest_path) -> dict:
    manifest = read_manifest(manifest_path)
    root = Path(manifest_path).parent
    return read_measurements_csv(root / manifest["measurements_csv"])


# ---------------------------------------------------------------------------
# input normalization conventions (shared with the generator's docs)


def image_stats(images: np.ndarray) -> tuple[float, float]:
    mean = float(images.mean())
    std = float(images.std())
    if std <= 0:
        raise ValueError("zero pixel variance")
    return mean, std


def standardize_images(images: np.ndarray, stats: tuple[float, float]) -> np.ndarray:
    mean, std = stats
    return (np.asarray(images, dtype=np.float64) - mean) / std


def corpus_bbox(clouds) -> tuple[np.ndarray, float]:
    """Shared center/scale over a training corpus; keeps relative body
    size, unlike per-cloud normalization."""
    lo = np.min([c.min(axis=0) for c in clouds], axis=0)
    hi = np.max([c.max(axis=0) for c in clouds], axis=0)
    scale = float((hi - lo).max() / 2.0)
    if scale <= 0:
        raise ValueError("zero corpus extent")
    return (lo + hi) / 2.0, scale


def normalize_clouds(clouds, transform: tuple[np.ndarray, float]) -> np.ndarray:
    center, scale = transform
    return np.stack([(c - center) / scale for c in clouds])
