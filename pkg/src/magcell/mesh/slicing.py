"""Planar cross sections and 2D loop utilities.

Sections are taken at constant z. Loops come back oriented the way the solid
dictates: counterclockwise around material, clockwise around holes, so
even-odd queries and signed areas agree with the mesh volume.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EmptySection
from .core import TriMesh

ON_PLANE_TOL = 1e-6


@dataclass(frozen=True)
class PlanarSection:
    """Cross section of a solid at constant z.

    ``loops`` are (n, 2) xy polylines, implicitly closed, counterclockwise
    around material and clockwise around holes.
    """

    z: float
    loops: tuple

    def __iter__(self):
        return iter(self.loops)

    def __len__(self):
        return len(self.loops)

    def area(self) -> float:
        return section_area(self.loops)


def slice_at(mesh: TriMesh, z: float, max_retries: int = 12) -> PlanarSection:
    """Cross-section of ``mesh`` at height ``z``.

    When the plane grazes a vertex or a horizontal facet the plane is nudged
    up by 1e-6 mm and the cut retried, so callers always see clean crossings.
    Raises EmptySection when the plane misses the solid.
    """
    z = float(z)
    zmin, zmax = mesh.z_range
    if z < zmin - ON_PLANE_TOL or z > zmax + ON_PLANE_TOL:
        raise EmptySection(f"plane z={z} misses the solid", z=z)
    vz = mesh.vertices[:, 2]
    z_in = z
    for _ in range(max_retries):
        if np.min(np.abs(vz - z)) > ON_PLANE_TOL:
            break
        z += ON_PLANE_TOL
    else:
        raise ValueError(f"could not find a vertex-free plane near z={z}")
    if z > zmax:
        raise EmptySection(f"plane z={z_in} misses the solid", z=z_in)

    below = vz < z
    f = mesh.faces
    b = below[f]
    nb = b.sum(axis=1)
    crossing = np.nonzero((nb == 1) | (nb == 2))[0]
    if len(crossing) == 0:
        raise EmptySection(f"plane z={z_in} misses the solid", z=z_in)

    tri = mesh.vertices[f[crossing]]
    tb = b[crossing]

    # per face: the two crossed edges, ordered so the segment runs along
    # z-hat x face_normal (material kept on the left, outer loops CCW)
    seg_pts = np.empty((len(crossing), 2, 2))
    seg_edges = np.empty((len(crossing), 2), dtype=np.int64)
    edge_key = {}

    def key_of(i0: int, i1: int) -> int:
        k = (i0, i1) if i0 < i1 else (i1, i0)
        if k not in edge_key:
            edge_key[k] = len(edge_key)
        return edge_key[k]

    faces_arr = f[crossing]
    for row in range(len(crossing)):
        pattern = tb[row]
        # rotate so exactly the first vertex is on the minority side
        order = None
        for r in range(3):
            rolled = np.roll(pattern, -r)
            if rolled[0] != rolled[1] and rolled[0] != rolled[2]:
                order = np.roll(np.arange(3), -r)
                break
        i, j, k = order
        p, q, s = tri[row, i], tri[row, j], tri[row, k]
        tpq = (z - p[2]) / (q[2] - p[2])
        tps = (z - p[2]) / (s[2] - p[2])
        xpq = p[:2] + tpq * (q[:2] - p[:2])
        xps = p[:2] + tps * (s[:2] - p[:2])
        kpq = key_of(faces_arr[row, i], faces_arr[row, j])
        kps = key_of(faces_arr[row, i], faces_arr[row, k])
        if pattern[i]:
            # lone vertex below: walking k-edge then j-edge keeps material left
            seg_pts[row, 0], seg_pts[row, 1] = xps, xpq
            seg_edges[row] = (kps, kpq)
        else:
            seg_pts[row, 0], seg_pts[row, 1] = xpq, xps
            seg_edges[row] = (kpq, kps)

    # chain segments: each crossed edge joins exactly two crossing faces
    start_of = {}
    for row in range(len(crossing)):
        start_of[seg_edges[row, 0]] = row
    visited = np.zeros(len(crossing), dtype=bool)
    loops = []
    for row0 in range(len(crossing)):
        if visited[row0]:
            continue
        pts = []
        row = row0
        while not visited[row]:
            visited[row] = True
            pts.append(seg_pts[row, 0])
            nxt = start_of.get(seg_edges[row, 1])
            if nxt is None:
                break
            row = nxt
        if len(pts) >= 3:
            loops.append(np.asarray(pts))
    if not loops:
        raise EmptySection(f"plane z={z_in} misses the solid", z=z_in)
    return PlanarSection(z_in, tuple(loops))


def loop_area(loop: np.ndarray) -> float:
    """Signed area (positive for counterclockwise)."""
    x, y = loop[:, 0], loop[:, 1]
    return float(0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def section_area(loops) -> float:
    return sum(loop_area(lp) for lp in loops)


def point_in_loops(point, loops) -> bool:
    """Even-odd containment against a set of loops."""
    x, y = float(point[0]), float(point[1])
    inside = False
    for lp in loops:
        x0, y0 = lp[:, 0], lp[:, 1]
        x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
        crosses = (y0 > y) != (y1 > y)
        if not np.any(crosses):
            continue
        xs = x0[crosses] + (y - y0[crosses]) / (y1[crosses] - y0[crosses]) * (
            x1[crosses] - x0[crosses]
        )
        inside ^= bool(np.count_nonzero(xs > x) % 2)
    return inside


def distance_to_loops(point, loops) -> float:
    """Unsigned distance from a point to the nearest loop segment."""
    x, y = float(point[0]), float(point[1])
    best = np.inf
    p = np.array([x, y])
    for lp in loops:
        a = lp
        b = np.roll(lp, -1, axis=0)
        ab = b - a
        ap = p[None, :] - a
        denom = np.einsum("ij,ij->i", ab, ab)
        t = np.clip(
            np.einsum("ij,ij->i", ap, ab) / np.where(denom == 0, 1.0, denom), 0.0, 1.0
        )
        d = ap - t[:, None] * ab
        best = min(best, float(np.sqrt(np.einsum("ij,ij->i", d, d).min())))
    return best


def signed_distance_in_section(point, loops) -> float:
    """Positive inside the material (even-odd), negative outside."""
    d = distance_to_loops(point, loops)
    return d if point_in_loops(point, loops) else -d
