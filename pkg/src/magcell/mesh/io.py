"""STL and OBJ reading/writing.

Loading welds vertices at 1e-6 mm and drops degenerate faces, so every mesh
entering the pipeline is indexed and deduplicated regardless of source
format. Binary STL output is deterministic: fixed header, no timestamps.
"""

from __future__ import annotations

import io
import os
import struct

import numpy as np

from ..errors import ParseError
from .core import TriMesh, weld

_STL_HEADER = b"magcell binary stl" + b" " * 62
_LOG_NONMANIFOLD = True


def load_mesh(source, fmt: str | None = None) -> TriMesh:
    """Read a mesh from a path, bytes, or binary file object.

    ``fmt`` may be "stl" or "obj"; when omitted it is taken from the file
    extension, falling back to content sniffing.
    """
    if isinstance(source, (str, os.PathLike)):
        path = os.fspath(source)
        if fmt is None:
            ext = os.path.splitext(path)[1].lower().lstrip(".")
            fmt = ext if ext in ("stl", "obj") else None
        with open(path, "rb") as fh:
            data = fh.read()
    elif isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    elif hasattr(source, "read"):
        data = source.read()
        if isinstance(data, str):
            data = data.encode()
    else:
        raise TypeError(f"cannot load mesh from {type(source)!r}")

    if not data:
        raise ParseError("empty mesh input")

    if fmt is None:
        fmt = _sniff(data)
    fmt = fmt.lower()
    if fmt == "stl":
        v, f = _read_stl(data)
    elif fmt == "obj":
        v, f = _read_obj(data)
    else:
        raise ParseError(f"unsupported mesh format: {fmt}")

    if len(f) == 0:
        raise ParseError("mesh has no faces")
    mesh = weld(v, f)
    if mesh.n_faces == 0:
        raise ParseError("mesh has no non-degenerate faces")
    if mesh.has_nonmanifold_edges:
        mesh = TriMesh(mesh.vertices, mesh.faces, non_manifold=True)
    return mesh


def save_mesh(mesh: TriMesh, path, fmt: str | None = None) -> None:
    path = os.fspath(path)
    if fmt is None:
        fmt = os.path.splitext(path)[1].lower().lstrip(".") or "stl"
    data = mesh_bytes(mesh, fmt)
    with open(path, "wb") as fh:
        fh.write(data)


def mesh_bytes(mesh: TriMesh, fmt: str = "stl") -> bytes:
    fmt = fmt.lower()
    if fmt == "stl":
        return _write_stl_binary(mesh)
    if fmt == "obj":
        return _write_obj(mesh)
    raise ValueError(f"unsupported mesh format: {fmt}")


def _sniff(data: bytes) -> str:
    head = data[:512].lstrip()
    if head.startswith(b"solid") and not _binary_stl_size_ok(data):
        return "stl"
    if _binary_stl_size_ok(data):
        return "stl"
    if head.startswith((b"v ", b"#", b"o ", b"vn ", b"mtllib")) or b"\nv " in data[:4096]:
        return "obj"
    raise ParseError("cannot determine mesh format from content")


def _binary_stl_size_ok(data: bytes) -> bool:
    if len(data) < 84:
        return False
    (n,) = struct.unpack_from("<I", data, 80)
    return len(data) == 84 + 50 * n


def _read_stl(data: bytes):
    if _binary_stl_size_ok(data) and not data[:5] == b"solid":
        return _read_stl_binary(data)
    if data[:5].lower() == b"solid":
        # an ascii header does not guarantee ascii content
        if _binary_stl_size_ok(data) and b"facet" not in data[:1024]:
            return _read_stl_binary(data)
        return _read_stl_ascii(data)
    if _binary_stl_size_ok(data):
        return _read_stl_binary(data)
    raise ParseError("not a valid STL file")


def _read_stl_binary(data: bytes):
    (n,) = struct.unpack_from("<I", data, 80)
    if len(data) != 84 + 50 * n:
        raise ParseError("binary STL truncated")
    raw = np.frombuffer(data, dtype=np.uint8, count=50 * n, offset=84)
    rec = raw.reshape(n, 50)[:, 12:48].copy()
    tris = rec.view(np.float32).reshape(n, 3, 3).astype(np.float64)
    v = tris.reshape(-1, 3)
    f = np.arange(3 * n, dtype=np.int64).reshape(n, 3)
    return v, f


def _read_stl_ascii(data: bytes):
    verts = []
    try:
        text = data.decode("utf-8", errors="replace")
    except Exception as exc:  # pragma: no cover
        raise ParseError(f"undecodable ascii STL: {exc}")
    for ln, line in enumerate(text.splitlines(), 1):
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "vertex":
            if len(parts) != 4:
                raise ParseError(f"malformed vertex on line {ln}")
            try:
                verts.append([float(parts[1]), float(parts[2]), float(parts[3])])
            except ValueError:
                raise ParseError(f"non-numeric vertex on line {ln}")
    if len(verts) % 3 != 0:
        raise ParseError("ascii STL vertex count not a multiple of 3")
    v = np.array(verts, dtype=np.float64).reshape(-1, 3)
    f = np.arange(len(v), dtype=np.int64).reshape(-1, 3)
    return v, f


def _read_obj(data: bytes):
    verts, faces = [], []
    text = data.decode("utf-8", errors="replace")
    for ln, line in enumerate(text.splitlines(), 1):
        if not line or line[0] not in "vf":
            continue
        parts = line.split()
        if parts[0] == "v":
            if len(parts) < 4:
                raise ParseError(f"malformed vertex on line {ln}")
            try:
                verts.append([float(parts[1]), float(parts[2]), float(parts[3])])
            except ValueError:
                raise ParseError(f"non-numeric vertex on line {ln}")
        elif parts[0] == "f":
            idx = []
            for tok in parts[1:]:
                head = tok.split("/")[0]
                try:
                    i = int(head)
                except ValueError:
                    raise ParseError(f"non-numeric face index on line {ln}")
                idx.append(i - 1 if i > 0 else len(verts) + i)
            if len(idx) < 3:
                raise ParseError(f"face with fewer than 3 vertices on line {ln}")
            for k in range(1, len(idx) - 1):  # fan-triangulate polygons
                faces.append([idx[0], idx[k], idx[k + 1]])
    v = np.array(verts, dtype=np.float64).reshape(-1, 3)
    f = np.array(faces, dtype=np.int64).reshape(-1, 3)
    if len(f) and (f.min() < 0 or f.max() >= len(v)):
        raise ParseError("face index out of range")
    return v, f


def _write_stl_binary(mesh: TriMesh) -> bytes:
    n = mesh.n_faces
    buf = io.BytesIO()
    buf.write(_STL_HEADER)
    buf.write(struct.pack("<I", n))
    rec = np.zeros((n, 50), dtype=np.uint8)
    normals = mesh.face_normals.astype(np.float32)
    tris = mesh.triangles.astype(np.float32)
    rec[:, 0:12] = normals.view(np.uint8).reshape(n, 12)
    rec[:, 12:48] = tris.reshape(n, 9).view(np.uint8).reshape(n, 36)
    buf.write(rec.tobytes())
    return buf.getvalue()


def _write_obj(mesh: TriMesh) -> bytes:
    out = []
    for x, y, z in mesh.vertices:
        out.append(f"v {x:.9g} {y:.9g} {z:.9g}")
    for a, b, c in mesh.faces + 1:
        out.append(f"f {a} {b} {c}")
    out.append("")
    return "\n".join(out).encode()
