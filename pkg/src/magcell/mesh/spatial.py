"""Spatial acceleration helpers shared by booleans, containment and remeshing."""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .core import TriMesh


class FaceGrid:
    """Uniform hash grid over face bounding boxes for broad-phase queries."""

    def __init__(self, mesh: TriMesh, cell: float | None = None):
        tri = mesh.triangles
        self.lo = tri.min(axis=(0, 1))
        self.hi = tri.max(axis=(0, 1))
        if cell is None:
            ext = tri.max(axis=1) - tri.min(axis=1)
            cell = float(np.median(ext.max(axis=1)))
            if cell <= 0:
                cell = 1.0
        self.cell = cell
        self.buckets: dict[tuple, list[int]] = {}
        flo = np.floor((tri.min(axis=1) - self.lo) / cell).astype(np.int64)
        fhi = np.floor((tri.max(axis=1) - self.lo) / cell).astype(np.int64)
        for i in range(len(tri)):
            x0, y0, z0 = flo[i]
            x1, y1, z1 = fhi[i]
            for x in range(x0, x1 + 1):
                for y in range(y0, y1 + 1):
                    for z in range(z0, z1 + 1):
                        self.buckets.setdefault((x, y, z), []).append(i)

    def query_aabb(self, lo, hi) -> np.ndarray:
        i0 = np.floor((np.asarray(lo) - self.lo) / self.cell).astype(np.int64)
        i1 = np.floor((np.asarray(hi) - self.lo) / self.cell).astype(np.int64)
        out: set[int] = set()
        for x in range(i0[0], i1[0] + 1):
            for y in range(i0[1], i1[1] + 1):
                for z in range(i0[2], i1[2] + 1):
                    b = self.buckets.get((x, y, z))
                    if b:
                        out.update(b)
        return np.fromiter(out, dtype=np.int64, count=len(out))


class ZColumnIndex:
    """xy-bucketed faces for vertical ray casting."""

    def __init__(self, mesh: TriMesh, cell: float | None = None):
        self.tri = mesh.triangles
        xy = self.tri[:, :, :2]
        self.lo = xy.min(axis=(0, 1))
        if cell is None:
            ext = xy.max(axis=1) - xy.min(axis=1)
            cell = float(np.median(ext.max(axis=1)))
            if cell <= 0:
                cell = 1.0
        self.cell = cell
        self.buckets: dict[tuple, list[int]] = {}
        flo = np.floor((xy.min(axis=1) - self.lo) / cell).astype(np.int64)
        fhi = np.floor((xy.max(axis=1) - self.lo) / cell).astype(np.int64)
        for i in range(len(self.tri)):
            for x in range(flo[i, 0], fhi[i, 0] + 1):
                for y in range(flo[i, 1], fhi[i, 1] + 1):
                    self.buckets.setdefault((x, y), []).append(i)

    def candidates(self, x: float, y: float) -> list[int]:
        key = (
            int(np.floor((x - self.lo[0]) / self.cell)),
            int(np.floor((y - self.lo[1]) / self.cell)),
        )
        return self.buckets.get(key, [])


def _ray_up_crossings(tri: np.ndarray, x: float, y: float, z: float):
    """Count upward-ray crossings; returns None when the hit is ambiguous."""
    if len(tri) == 0:
        return 0
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    # 2D signed areas of the projected triangle against the point
    d1 = (b[:, 0] - a[:, 0]) * (y - a[:, 1]) - (b[:, 1] - a[:, 1]) * (x - a[:, 0])
    d2 = (c[:, 0] - b[:, 0]) * (y - b[:, 1]) - (c[:, 1] - b[:, 1]) * (x - b[:, 0])
    d3 = (a[:, 0] - c[:, 0]) * (y - c[:, 1]) - (a[:, 1] - c[:, 1]) * (x - c[:, 0])
    area2 = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    eps = 1e-12 * np.maximum(1.0, np.abs(area2))
    pos = (d1 >= -eps) & (d2 >= -eps) & (d3 >= -eps) & (area2 > 0)
    neg = (d1 <= eps) & (d2 <= eps) & (d3 <= eps) & (area2 < 0)
    inside = pos | neg
    border = inside & (
        (np.abs(d1) <= eps) | (np.abs(d2) <= eps) | (np.abs(d3) <= eps)
    )
    if np.any(border):
        return None
    idx = np.nonzero(inside)[0]
    if len(idx) == 0:
        return 0
    # barycentric z of the hit
    w1 = d2[idx] / area2[idx]
    w2 = d3[idx] / area2[idx]
    w3 = d1[idx] / area2[idx]
    zhit = w1 * a[idx, 2] + w2 * b[idx, 2] + w3 * c[idx, 2]
    near = np.abs(zhit - z) <= 1e-9
    if np.any(near):
        return None
    return int(np.count_nonzero(zhit > z))


def contains_points(mesh: TriMesh, points, index: ZColumnIndex | None = None) -> np.ndarray:
    """Even-odd containment test for points against a closed mesh.

    Ambiguous vertical rays (grazing an edge or landing on the surface) are
    retried from jittered xy positions; the jitter stays far below the weld
    tolerance so the answer is effectively exact for interior points.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if index is None:
        index = ZColumnIndex(mesh)
    tri = index.tri
    out = np.zeros(len(pts), dtype=bool)
    jitters = [(0.0, 0.0), (3e-8, 1e-8), (-1e-8, 3e-8), (2e-8, -3e-8), (-3e-8, -2e-8)]
    for pi, (x, y, z) in enumerate(pts):
        for dx, dy in jitters:
            cand = index.candidates(x + dx, y + dy)
            n = _ray_up_crossings(tri[cand], x + dx, y + dy, z)
            if n is not None:
                out[pi] = bool(n % 2)
                break
        else:  # all jitters ambiguous; fall back to a coarse answer
            cand = index.candidates(x, y)
            n = _ray_up_crossings(tri[cand], x + 1e-7, y + 1.7e-7, z)
            out[pi] = bool((n or 0) % 2)
    return out


def closest_on_triangles(points: np.ndarray, tri: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Closest point on each triangle for each query, vectorized.

    points: (n, 3), tri: (n, k, 3, 3) or broadcastable. Returns
    (closest (n, k, 3), squared distances (n, k)).
    """
    a, b, c = tri[..., 0, :], tri[..., 1, :], tri[..., 2, :]
    p = points[:, None, :]
    ab = b - a
    ac = c - a
    ap = p - a
    d1 = np.einsum("...i,...i->...", ab, ap)
    d2 = np.einsum("...i,...i->...", ac, ap)
    bp = p - b
    d3 = np.einsum("...i,...i->...", ab, bp)
    d4 = np.einsum("...i,...i->...", ac, bp)
    cp = p - c
    d5 = np.einsum("...i,...i->...", ab, cp)
    d6 = np.einsum("...i,...i->...", ac, cp)

    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2
    denom = va + vb + vc
    v = np.where(np.abs(denom) > 0, vb / np.where(denom == 0, 1.0, denom), 0.0)
    w = np.where(np.abs(denom) > 0, vc / np.where(denom == 0, 1.0, denom), 0.0)
    closest = a + v[..., None] * ab + w[..., None] * ac

    safe = lambda num, den: num / np.where(np.abs(den) < 1e-30, 1.0, den)
    # vertex regions
    closest = np.where(((d1 <= 0) & (d2 <= 0))[..., None], a, closest)
    closest = np.where(((d3 >= 0) & (d4 <= d3))[..., None], b, closest)
    closest = np.where(((d6 >= 0) & (d5 <= d6))[..., None], c, closest)
    # edge ab
    on_ab = (vc <= 0) & (d1 >= 0) & (d3 <= 0) & ~((d1 <= 0) & (d2 <= 0)) & ~((d3 >= 0) & (d4 <= d3))
    t_ab = safe(d1, d1 - d3)
    closest = np.where(on_ab[..., None], a + t_ab[..., None] * ab, closest)
    # edge ac
    on_ac = (vb <= 0) & (d2 >= 0) & (d6 <= 0) & ~((d1 <= 0) & (d2 <= 0)) & ~((d6 >= 0) & (d5 <= d6))
    t_ac = safe(d2, d2 - d6)
    closest = np.where(on_ac[..., None], a + t_ac[..., None] * ac, closest)
    # edge bc
    on_bc = (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0) & ~((d3 >= 0) & (d4 <= d3)) & ~((d6 >= 0) & (d5 <= d6))
    t_bc = safe(d4 - d3, (d4 - d3) + (d5 - d6))
    closest = np.where(on_bc[..., None], b + t_bc[..., None] * (c - b), closest)

    d = p - closest
    return closest, np.einsum("...i,...i->...", d, d)


class SurfaceProjector:
    """Project points onto a reference surface via nearest-centroid candidates."""

    def __init__(self, mesh: TriMesh, k: int = 12):
        self.tri = mesh.triangles
        self.k = min(k, len(self.tri))
        self.tree = cKDTree(self.tri.mean(axis=1))

    def project(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        _, idx = self.tree.query(pts, k=self.k)
        if self.k == 1:
            idx = idx[:, None]
        closest, d2 = closest_on_triangles(pts, self.tri[idx])
        best = np.argmin(d2, axis=1)
        return closest[np.arange(len(pts)), best]


def ray_hit(mesh: TriMesh, origin, direction, t_min: float = 1e-9) -> float | None:
    """Distance along ``direction`` to the first surface hit, None on a miss.

    Brute-force Moller-Trumbore over every face, vectorized; fine for the
    few-thousand-ray workloads this package runs. ``direction`` need not be
    unit length; the returned t is in multiples of it.
    """
    o = np.asarray(origin, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)
    tri = mesh.triangles
    e1 = tri[:, 1] - tri[:, 0]
    e2 = tri[:, 2] - tri[:, 0]
    pvec = np.cross(d, e2)
    det = np.einsum("ij,ij->i", e1, pvec)
    ok = np.abs(det) > 1e-14
    inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    tvec = o - tri[:, 0]
    u = np.einsum("ij,ij->i", tvec, pvec) * inv
    qvec = np.cross(tvec, e1)
    v = np.einsum("j,ij->i", d, qvec) * inv
    t = np.einsum("ij,ij->i", e2, qvec) * inv
    eps = 1e-12
    hit = ok & (u >= -eps) & (v >= -eps) & (u + v <= 1 + eps) & (t > t_min)
    if not np.any(hit):
        return None
    return float(t[hit].min())
