"""Mesh, point-cloud and skeleton file formats.

OBJ is ASCII v/f with 1-based indices. PLY is binary little-endian with
double precision coordinates so arrays round-trip bit-identically.
Skeletons are JSON maps joint-name -> [x, y, z] in meters.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import ParseError
from .mesh import Skeleton, TriangleMesh

_PLY_TYPES = {
    "char": ("i1", 1),
    "uchar": ("u1", 1),
    "int8": ("i1", 1),
    "uint8": ("u1", 1),
    "short": ("i2", 2),
    "ushort": ("u2", 2),
    "int16": ("i2", 2),
    "uint16": ("u2", 2),
    "int": ("i4", 4),
    "uint": ("u4", 4),
    "int32": ("i4", 4),
    "uint32": ("u4", 4),
    "float": ("f4", 4),
    "float32": ("f4", 4),
    "double": ("f8", 8),
    "float64": ("f8", 8),
}


def _check_triangles(mesh: TriangleMesh, source: str) -> TriangleMesh:
    if mesh.n_triangles:
        areas = mesh.triangle_areas()
        if (areas <= 1e-20).any():
            bad = int(np.argmax(areas <= 1e-20))
            raise ParseError(f"{source}: degenerate (zero-area) triangle {bad}")
    return mesh


def write_obj(mesh: TriangleMesh, path) -> None:
    lines = []
    for x, y, z in mesh.vertices:
        lines.append(f"v {x:.17g} {y:.17g} {z:.17g}")
    for a, b, c in mesh.triangles + 1:
        lines.append(f"f {a} {b} {c}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_obj(path) -> TriangleMesh:
    verts: list[tuple[float, float, float]] = []
    faces: list[tuple[int, int, int]] = []
    for ln, line in enumerate(Path(path).read_text().splitlines(), start=1):
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "v":
            if len(parts) < 4:
                raise ParseError(f"{path}:{ln}: malformed vertex line")
            verts.append((float(parts[1]), float(parts[2]), float(parts[3])))
        elif parts[0] == "f":
            idx = []
            for p in parts[1:]:
                try:
                    i = int(p.split("/")[0])
                except ValueError as exc:
                    raise ParseError(f"{path}:{ln}: bad face index {p!r}") from exc
                idx.append(i + len(verts) if i < 0 else i - 1)
            if len(idx) != 3:
                raise ParseError(f"{path}:{ln}: only triangle faces are supported")
            faces.append(tuple(idx))
    if not verts:
        raise ParseError(f"{path}: no vertices")
    try:
        mesh = TriangleMesh(np.array(verts), np.array(faces, dtype=np.int64).reshape(-1, 3))
    except Exception as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return _check_triangles(mesh, str(path))


def write_ply_mesh(mesh: TriangleMesh, path) -> None:
    _write_ply(path, mesh.vertices, mesh.triangles)


def write_ply_points(points: np.ndarray, path) -> None:
    _write_ply(path, np.asarray(points, dtype=np.float64), None)


def _write_ply(path, vertices: np.ndarray, faces: np.ndarray | None) -> None:
    header = ["ply", "format binary_little_endian 1.0", f"element vertex {len(vertices)}"]
    header += ["property double x", "property double y", "property double z"]
    if faces is not None:
        header.append(f"element face {len(faces)}")
        header.append("property list uchar int vertex_indices")
    header.append("end_header")
    with open(path, "wb") as f:
        f.write(("\n".join(header) + "\n").encode("ascii"))
        f.write(vertices.astype("<f8").tobytes())
        if faces is not None:
            rec = np.empty(len(faces), dtype=[("n", "u1"), ("idx", "<i4", (3,))])
            rec["n"] = 3
            rec["idx"] = faces
            f.write(rec.tobytes())


def _read_ply_header(f, path):
    line = f.readline().decode("ascii", "replace").strip()
    if line != "ply":
        raise ParseError(f"{path}: not a PLY file")
    fmt = None
    elements = []  # (name, count, [(prop_name, type) or ('list', count_t, item_t, name)])
    while True:
        line = f.readline()
        if not line:
            raise ParseError(f"{path}: truncated header")
        parts = line.decode("ascii", "replace").split()
        if not parts:
            continue
        if parts[0] == "comment":
            continue
        if parts[0] == "format":
            fmt = parts[1]
        elif parts[0] == "element":
            elements.append((parts[1], int(parts[2]), []))
        elif parts[0] == "property":
            if not elements:
                raise ParseError(f"{path}: property before element")
            if parts[1] == "list":
                elements[-1][2].append(("list", parts[2], parts[3], parts[4]))
            else:
                elements[-1][2].append((parts[2], parts[1]))
        elif parts[0] == "end_header":
            break
    if fmt != "binary_little_endian":
        raise ParseError(f"{path}: only binary little-endian PLY is supported (got {fmt})")
    return elements


def read_ply(path):
    """Reads a binary little-endian PLY. Returns (vertices, faces-or-None)."""
    with open(path, "rb") as f:
        elements = _read_ply_header(f, path)
        vertices = None
        faces = None
        for name, count, props in elements:
            if name == "vertex":
                if any(p[0] == "list" for p in props):
                    raise ParseError(f"{path}: list property in vertex element")
                dtype = np.dtype([(p[0], "<" + _PLY_TYPES[p[1]][0]) for p in props])
                buf = f.read(dtype.itemsize * count)
                if len(buf) != dtype.itemsize * count:
                    raise ParseError(f"{path}: truncated vertex data")
                rec = np.frombuffer(buf, dtype=dtype)
                try:
                    vertices = np.stack(
                        [rec["x"], rec["y"], rec["z"]], axis=1
                    ).astype(np.float64)
                except KeyError as exc:
                    raise ParseError(f"{path}: vertex element lacks x/y/z") from exc
            elif name == "face":
                if len(props) != 1 or props[0][0] != "list":
                    raise ParseError(f"{path}: unsupported face properties")
                _, count_t, item_t, _ = props[0]
                csz = _PLY_TYPES[count_t][1]
                isz = _PLY_TYPES[item_t][1]
                cfmt = "<" + {1: "B", 2: "H", 4: "I"}[csz]
                out = np.empty((count, 3), dtype=np.int64)
                for i in range(count):
                    (n,) = struct.unpack(cfmt, f.read(csz))
                    if n != 3:
                        raise ParseError(f"{path}: face {i} has {n} vertices, want 3")
                    out[i] = np.frombuffer(f.read(isz * 3), dtype="<" + _PLY_TYPES[item_t][0])
                faces = out
            else:
                # skip unknown fixed-size elements
                if any(p[0] == "list" for p in props):
                    raise ParseError(f"{path}: cannot skip element {name} with list property")
                size = sum(_PLY_TYPES[p[1]][1] for p in props) * count
                f.read(size)
    if vertices is None:
        raise ParseError(f"{path}: no vertex element")
    return vertices, faces


def read_ply_mesh(path) -> TriangleMesh:
    vertices, faces = read_ply(path)
    if faces is None:
        raise ParseError(f"{path}: no face element")
    try:
        mesh = TriangleMesh(vertices, faces)
    except Exception as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return _check_triangles(mesh, str(path))


def read_ply_points(path) -> np.ndarray:
    vertices, _ = read_ply(path)
    return vertices


def write_skeleton_json(skeleton: Skeleton, path) -> None:
    data = {k: [float(x) for x in v] for k, v in skeleton.joints.items()}
    Path(path).write_text(json.dumps(data, indent=1, sort_keys=True) + "\n")


def read_skeleton_json(path) -> Skeleton:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{path}: skeleton JSON must be an object")
    joints = {}
    for k, v in data.items():
        if not (isinstance(v, list) and len(v) == 3):
            raise ParseError(f"{path}: joint {k!r} must map to [x, y, z]")
        joints[k] = [float(x) for x in v]
    return Skeleton(joints)
