"""Indexed triangle mesh: the geometric currency of the whole pipeline.

All coordinates are millimeters. A TriMesh is immutable after construction;
every derived quantity is cached lazily. Operations elsewhere in the package
return new meshes instead of mutating.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

DEGENERATE_AREA = 1e-9  # mm^2, faces below this are considered degenerate
WELD_TOL = 1e-6  # mm, vertex welding tolerance


def _as_vertices(arr) -> np.ndarray:
    v = np.ascontiguousarray(np.asarray(arr, dtype=np.float64))
    if v.ndim != 2 or v.shape[1] != 3:
        raise ValueError(f"vertices must be (n, 3), got {v.shape}")
    v.setflags(write=False)
    return v


def _as_faces(arr) -> np.ndarray:
    f = np.ascontiguousarray(np.asarray(arr, dtype=np.int64))
    if f.size == 0:
        f = f.reshape(0, 3)
    if f.ndim != 2 or f.shape[1] != 3:
        raise ValueError(f"faces must be (m, 3), got {f.shape}")
    f.setflags(write=False)
    return f


@dataclass(frozen=True)
class TriMesh:
    vertices: np.ndarray
    faces: np.ndarray
    non_manifold: bool = field(default=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "vertices", _as_vertices(self.vertices))
        object.__setattr__(self, "faces", _as_faces(self.faces))
        if len(self.faces) and (
            self.faces.min() < 0 or self.faces.max() >= len(self.vertices)
        ):
            raise ValueError("face index out of range")

    # -- basic quantities ---------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @cached_property
    def triangles(self) -> np.ndarray:
        """(m, 3, 3) corner coordinates."""
        return self.vertices[self.faces]

    @cached_property
    def face_cross(self) -> np.ndarray:
        t = self.triangles
        return np.cross(t[:, 1] - t[:, 0], t[:, 2] - t[:, 0])

    @cached_property
    def face_areas(self) -> np.ndarray:
        return 0.5 * np.linalg.norm(self.face_cross, axis=1)

    @cached_property
    def face_normals(self) -> np.ndarray:
        n = self.face_cross.copy()
        lens = np.linalg.norm(n, axis=1)
        ok = lens > 0
        n[ok] /= lens[ok, None]
        return n

    @cached_property
    def vertex_normals(self) -> np.ndarray:
        """Area-weighted vertex normals (unit where defined)."""
        vn = np.zeros_like(self.vertices)
        # face_cross has magnitude 2*area, so summing it weights by area
        np.add.at(vn, self.faces[:, 0], self.face_cross)
        np.add.at(vn, self.faces[:, 1], self.face_cross)
        np.add.at(vn, self.faces[:, 2], self.face_cross)
        lens = np.linalg.norm(vn, axis=1)
        ok = lens > 0
        vn[ok] /= lens[ok, None]
        return vn

    @cached_property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    @property
    def z_range(self) -> tuple[float, float]:
        lo, hi = self.bounds
        return float(lo[2]), float(hi[2])

    # -- topology -----------------------------------------------------------

    @cached_property
    def _edge_info(self):
        """Directed edge bookkeeping for closedness checks.

        Returns (undirected unique edges, per-edge face counts,
        directed-edge balance ok).
        """
        f = self.faces
        directed = np.concatenate(
            [f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]], axis=0
        )
        und = np.sort(directed, axis=1)
        uniq, counts = np.unique(und, axis=0, return_counts=True)
        # consistent winding: every undirected edge used once per direction
        forward = directed[:, 0] < directed[:, 1]
        fwd, fwd_c = np.unique(und[forward], axis=0, return_counts=True)
        bwd, bwd_c = np.unique(und[~forward], axis=0, return_counts=True)
        balanced = (
            len(fwd) == len(bwd) == len(uniq)
            and np.array_equal(fwd, uniq)
            and np.array_equal(bwd, uniq)
            and bool(np.all(fwd_c == 1))
            and bool(np.all(bwd_c == 1))
        )
        return uniq, counts, balanced

    @cached_property
    def edges(self) -> np.ndarray:
        return self._edge_info[0]

    @cached_property
    def boundary_edges(self) -> np.ndarray:
        uniq, counts, _ = self._edge_info
        return uniq[counts == 1]

    @cached_property
    def has_nonmanifold_edges(self) -> bool:
        _, counts, _ = self._edge_info
        return bool(np.any(counts > 2))

    @cached_property
    def is_edge_closed(self) -> bool:
        """Every edge shared by exactly two faces."""
        if self.n_faces == 0:
            return False
        _, counts, _ = self._edge_info
        return bool(np.all(counts == 2))

    @cached_property
    def is_closed(self) -> bool:
        """Watertight with consistent outward winding (volume > 0)."""
        if not self.is_edge_closed:
            return False
        if not self._edge_info[2]:
            return False
        return self.signed_volume() > 0

    # -- measures -----------------------------------------------------------

    def signed_volume(self) -> float:
        """Signed tetrahedron sum against the centroid (mm^3)."""
        t = self.triangles
        if len(t) == 0:
            return 0.0
        origin = self.vertices.mean(axis=0)
        a = t[:, 0] - origin
        b = t[:, 1] - origin
        c = t[:, 2] - origin
        return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)

    def volume(self) -> float:
        return self.signed_volume()

    def area(self) -> float:
        return float(self.face_areas.sum())

    def partial_volume_below(self, z: float) -> float:
        """Volume of the solid clipped to the half-space ``z' <= z``.

        Each face is clipped against the plane; tetrahedra are summed from an
        apex placed in the clipping plane, so the planar cap contributes zero
        and never needs to be built.
        """
        z = float(z)
        zmin, zmax = self.z_range
        if z <= zmin:
            return 0.0
        if z >= zmax:
            return self.volume()
        t = self.triangles
        cx, cy = self.vertices[:, 0].mean(), self.vertices[:, 1].mean()
        apex = np.array([cx, cy, z])
        total = 0.0
        zs = t[:, :, 2]
        below = zs <= z
        nb = below.sum(axis=1)
        # fully below faces, vectorized
        full = t[nb == 3]
        if len(full):
            a = full[:, 0] - apex
            b = full[:, 1] - apex
            c = full[:, 2] - apex
            total += np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0
        # crossing faces, clipped one by one (few relative to the mesh)
        for fi in np.nonzero((nb == 1) | (nb == 2))[0]:
            poly = _clip_poly_below(t[fi], z)
            if len(poly) < 3:
                continue
            p0 = poly[0] - apex
            for k in range(1, len(poly) - 1):
                total += np.dot(p0, np.cross(poly[k] - apex, poly[k + 1] - apex)) / 6.0
        return float(total)

    # -- construction helpers -------------------------------------------

    def flipped(self) -> "TriMesh":
        """Reverse winding (normals point the other way)."""
        return TriMesh(self.vertices, self.faces[:, [0, 2, 1]])

    def translated(self, offset) -> "TriMesh":
        return TriMesh(self.vertices + np.asarray(offset, dtype=np.float64), self.faces)

    def transformed(self, matrix) -> "TriMesh":
        """Apply a 3x3 linear map or 4x4 homogeneous transform."""
        m = np.asarray(matrix, dtype=np.float64)
        if m.shape == (3, 3):
            v = self.vertices @ m.T
        elif m.shape == (4, 4):
            v = self.vertices @ m[:3, :3].T + m[:3, 3]
        else:
            raise ValueError("matrix must be 3x3 or 4x4")
        return TriMesh(v, self.faces)

    def welded(self, tol: float = WELD_TOL, drop_degenerate: bool = True) -> "TriMesh":
        return weld(self.vertices, self.faces, tol=tol, drop_degenerate=drop_degenerate)


def weld(vertices, faces, tol: float = WELD_TOL, drop_degenerate: bool = True) -> TriMesh:
    """Merge vertices closer than ``tol`` and drop collapsed faces.

    Quantizes to a grid of spacing ``tol``; coordinates are rounded so two
    points within tol of each other land in the same cell in almost all
    cases, which is what mesh file IO and boolean assembly need.
    """
    v = np.asarray(vertices, dtype=np.float64)
    f = np.asarray(faces, dtype=np.int64)
    if len(v) == 0:
        return TriMesh(v.reshape(0, 3), f.reshape(0, 3))
    keys = np.round(v / tol).astype(np.int64)
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    new_v = v[first]
    new_f = inverse[f] if len(f) else f
    if len(new_f) and drop_degenerate:
        a, b, c = new_f[:, 0], new_f[:, 1], new_f[:, 2]
        keep = (a != b) & (b != c) & (a != c)
        new_f = new_f[keep]
        t = new_v[new_f]
        areas = 0.5 * np.linalg.norm(
            np.cross(t[:, 1] - t[:, 0], t[:, 2] - t[:, 0]), axis=1
        )
        new_f = new_f[areas > DEGENERATE_AREA]
    # drop unreferenced vertices
    if len(new_f):
        used = np.unique(new_f)
        remap = -np.ones(len(new_v), dtype=np.int64)
        remap[used] = np.arange(len(used))
        new_v = new_v[used]
        new_f = remap[new_f]
    else:
        new_v = new_v[:0]
    return TriMesh(new_v, new_f)


def concat(meshes) -> TriMesh:
    """Concatenate meshes as independent components (no welding).

    The point-set union of solids with disjoint interiors; signed volumes
    add and each component keeps its own watertight boundary.
    """
    meshes = [m for m in meshes if m.n_faces]
    if not meshes:
        return TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    vs, fs, off = [], [], 0
    for m in meshes:
        vs.append(m.vertices)
        fs.append(m.faces + off)
        off += m.n_vertices
    return TriMesh(np.vstack(vs), np.vstack(fs))


def _clip_poly_below(tri: np.ndarray, z: float) -> list:
    """Clip one triangle to z' <= z, returning the polygon below."""
    out = []
    for i in range(3):
        p, q = tri[i], tri[(i + 1) % 3]
        pin, qin = p[2] <= z, q[2] <= z
        if pin:
            out.append(p)
        if pin != qin:
            t = (z - p[2]) / (q[2] - p[2])
            out.append(p + t * (q - p))
    return out
