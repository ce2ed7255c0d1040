"""Cell placement, lofting, overlap resolution, and porous assembly.

Cells are convex truncated polyhedra spanning the body: outer cap on the
cell body's outer face (where the syringe enters through unprinted screen
area), inner cap on its inner face. Centers come from an isotropic remesh
of the outer body face at pitch cross_section + gap, which spaces them one
cell plus one wall apart.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .constraints import (
    INSCRIBED_MIN,
    SHAPE_SEGMENTS,
    CellSpec,
    PrinterProfile,
    circumscribed_radius,
    inscribed_diameter,
)
from .errors import BooleanFailure, EmptyPlacement, ProjectionMiss, RemeshDiverged
from .mesh.boolean import difference
from .mesh.core import TriMesh, concat
from .mesh.remesh import remesh_isotropic
from .mesh.spatial import ray_hit
from .shell import ShellModel

log = logging.getLogger(__name__)

# caps of the subtracted solid are pushed this far past the body faces so
# the boolean never has to cut along a coincident surface
CAP_EXTENSION = 0.2

STATUSES = ("ok", "shrunk", "overlapping", "boolean_failed")


@dataclass(frozen=True)
class CellSeed:
    """A placement site: center and normal plus the 1-ring used to
    estimate local curvature for the perspective loft."""

    center: np.ndarray
    normal: np.ndarray
    ring_points: np.ndarray
    ring_normals: np.ndarray

    def __iter__(self):
        # unpacks as (center, normal)
        return iter((self.center, self.normal))

    @property
    def ring(self):
        return self.ring_points, self.ring_normals


@dataclass(frozen=True)
class Cell:
    id: int
    center: np.ndarray
    normal: np.ndarray
    solid: TriMesh
    volume: float
    status: str
    cross_section: float
    solid_extended: TriMesh
    ring: tuple | None = None

    def row(self) -> dict:
        """Cell table entry consumed by the planner and the UI."""
        return {
            "id": self.id,
            "center": [round(float(c), 6) for c in self.center],
            "normal": [round(float(c), 6) for c in self.normal],
            "status": self.status,
            "volume_mm3": round(float(self.volume), 6),
            "cross_section_mm": round(float(self.cross_section), 6),
        }


@dataclass(frozen=True)
class DisplayModel:
    shell: ShellModel
    cells: tuple
    printable: TriMesh
    report: dict


def polygon2d(shape: str, cross_section: float) -> np.ndarray:
    """Cross-section polygon, CCW, first vertex on the +u axis."""
    k = SHAPE_SEGMENTS[shape]
    r = circumscribed_radius(shape, cross_section)
    ang = 2.0 * np.pi * np.arange(k) / k
    return np.stack([r * np.cos(ang), r * np.sin(ang)], axis=1)


def plane_basis(normal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """In-plane (u, v) with u toward global +X projected, ties toward +Y."""
    n = normal / np.linalg.norm(normal)
    for axis in ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0)):
        u = np.asarray(axis) - np.dot(axis, n) * n
        ln = np.linalg.norm(u)
        if ln > 1e-8:
            return u / ln, np.cross(n, u / ln)
    raise ValueError("degenerate normal")


def place_cells(shell: ShellModel, spec: CellSpec) -> list[CellSeed]:
    """Cell centers and normals from an isotropic remesh of the body face."""
    surface = shell.placement_surface
    target = spec.pitch
    try:
        rm = remesh_isotropic(surface, target)
    except RemeshDiverged:
        lo, hi = surface.bounds
        if target > 0.5 * float(np.linalg.norm(hi - lo)):
            # pitch near or beyond the model size: whatever vertices the
            # collapse run left are the honest placement answer
            rm = remesh_isotropic(surface, target, strict=False)
        else:
            raise

    normals = rm.vertex_normals
    neighbors: list[set[int]] = [set() for _ in range(len(rm.vertices))]
    for a, b, c in rm.faces:
        neighbors[a].update((int(b), int(c)))
        neighbors[b].update((int(a), int(c)))
        neighbors[c].update((int(a), int(b)))

    keep = np.ones(len(rm.vertices), dtype=bool)
    if shell.single_sided or len(rm.boundary_edges) > 0:
        keep = _interior_filter(rm, spec)

    order = sorted(
        np.nonzero(keep)[0],
        key=lambda i: tuple(np.round(rm.vertices[i], 6)[::-1]),
    )
    seeds = [
        CellSeed(
            center=rm.vertices[i].copy(),
            normal=normals[i].copy(),
            ring_points=rm.vertices[sorted(neighbors[i])].copy(),
            ring_normals=normals[sorted(neighbors[i])].copy(),
        )
        for i in order
    ]
    if not seeds:
        raise EmptyPlacement(
            f"no cell centers fit: pitch {target} mm leaves no interior "
            "placement sites"
        )
    log.info("placed %d cell centers at pitch %.2f mm", len(seeds), target)
    return seeds


def _interior_filter(rm: TriMesh, spec: CellSpec) -> np.ndarray:
    """Drop centers whose polygon plus rim wall would cross the sheet edge."""
    be = rm.boundary_edges
    keep = np.ones(len(rm.vertices), dtype=bool)
    if len(be) == 0:
        return keep
    keep[np.unique(be)] = False
    margin = circumscribed_radius(spec.shape, spec.cross_section) + spec.gap
    a = rm.vertices[be[:, 0]]
    ab = rm.vertices[be[:, 1]] - a
    denom = np.einsum("ij,ij->i", ab, ab)
    denom[denom == 0] = 1.0
    for i in np.nonzero(keep)[0]:
        ap = rm.vertices[i][None, :] - a
        t = np.clip(np.einsum("ij,ij->i", ap, ab) / denom, 0.0, 1.0)
        d = ap - t[:, None] * ab
        if np.sqrt(np.einsum("ij,ij->i", d, d).min()) < margin:
            keep[i] = False
    return keep


def perspective_scale(center, normal, ring, depth: float) -> float:
    """Inner/outer polygon ratio from the local curvature-eye estimate.

    The eye is the least-squares intersection of the 1-ring normal lines.
    Flat neighborhoods (or a ratio within 2% of 1) fall back to parallel
    projection.
    """
    if ring is None:
        return 1.0
    ring_points, ring_normals = ring
    pts = np.vstack([center[None, :], np.atleast_2d(ring_points)])
    nrm = np.vstack([normal[None, :], np.atleast_2d(ring_normals)])
    nrm = nrm / np.linalg.norm(nrm, axis=1, keepdims=True)
    proj = np.eye(3)[None, :, :] - nrm[:, :, None] * nrm[:, None, :]
    a = proj.sum(axis=0)
    b = np.einsum("nij,nj->i", proj, pts)
    w = np.linalg.eigvalsh(a)
    if w[0] < 1e-6 * max(w[-1], 1e-12):
        return 1.0  # normals are parallel: flat region
    eye = np.linalg.solve(a, b)
    r_out = float(np.dot(center - eye, normal))
    if abs(r_out) < 1e-9:
        return 1.0
    scale = (r_out - depth) / r_out
    if not np.isfinite(scale) or abs(scale - 1.0) < 0.02:
        return 1.0
    return float(np.clip(scale, 0.1, 2.5))


def loft_cell(
    center,
    normal,
    spec: CellSpec,
    shell: ShellModel,
    ring=None,
    cross_section: float | None = None,
    cap_extension: float = CAP_EXTENSION,
) -> Cell:
    """Loft one truncated polyhedron from the outer body face to the inner.

    Raises ProjectionMiss when the inward normal ray never reaches the
    cell floor surface (a blank-region site).
    """
    center = np.asarray(center, dtype=np.float64)
    n = np.asarray(normal, dtype=np.float64)
    n = n / np.linalg.norm(n)
    cs = spec.cross_section if cross_section is None else cross_section

    depth = ray_hit(shell.cell_floor, center, -n)
    if depth is None:
        raise ProjectionMiss(
            f"normal ray from ({center[0]:.2f}, {center[1]:.2f}, "
            f"{center[2]:.2f}) misses the cell floor"
        )
    max_depth = 3.0 * (spec.cell_depth + spec.screen_thickness) + 1.0
    if not 0.05 <= depth <= max_depth:
        raise ProjectionMiss(
            f"normal ray hit at {depth:.2f} mm is outside the plausible "
            f"cell depth range (0.05..{max_depth:.2f})"
        )

    u, v = plane_basis(n)
    scale = perspective_scale(center, n, ring, depth)
    pts2 = polygon2d(spec.shape, cs)
    offset3 = pts2[:, 0:1] * u[None, :] + pts2[:, 1:2] * v[None, :]
    outer = center[None, :] + offset3
    inner = (center - depth * n)[None, :] + scale * offset3

    solid = _loft_solid(outer, inner)
    stretch = cap_extension / depth
    axis = outer - inner
    solid_ext = _loft_solid(outer + stretch * axis, inner - stretch * axis)
    return Cell(
        id=-1,
        center=center,
        normal=n,
        solid=solid,
        volume=solid.volume(),
        status="ok",
        cross_section=cs,
        solid_extended=solid_ext,
        ring=ring,
    )


def _loft_solid(outer: np.ndarray, inner: np.ndarray) -> TriMesh:
    k = len(outer)
    verts = np.vstack([outer, inner])
    faces = []
    for i in range(1, k - 1):
        faces.append([0, i, i + 1])  # outer cap, facing +normal
    for i in range(1, k - 1):
        faces.append([k, k + i + 1, k + i])  # inner cap, facing -normal
    for i in range(k):
        j = (i + 1) % k
        faces.append([i, k + i, k + j])
        faces.append([i, k + j, j])
    return TriMesh(verts, np.asarray(faces, dtype=np.int64))


def build_cells(
    shell: ShellModel, spec: CellSpec, seeds: list[CellSeed]
) -> tuple[list[Cell], int]:
    """Loft every seed; returns (cells with dense ids, projection miss count)."""
    cells: list[Cell] = []
    misses = 0
    for seed in seeds:
        try:
            cell = loft_cell(
                seed.center, seed.normal, spec, shell, ring=seed.ring
            )
        except ProjectionMiss as exc:
            log.warning("projection miss: %s", exc)
            misses += 1
            continue
        cells.append(replace(cell, id=len(cells)))
    return cells, misses


# ---------------------------------------------------------------------------
# overlap resolution


def _sat_features(solid: TriMesh):
    verts = solid.vertices
    normals = solid.face_normals
    fn = np.unique(np.round(normals, 6), axis=0)
    e = verts[solid.edges]
    d = e[:, 1] - e[:, 0]
    d = d / np.linalg.norm(d, axis=1, keepdims=True)
    # canonical sign so opposite directions dedupe
    flip = (d[:, 0] < 0) | ((d[:, 0] == 0) & (d[:, 1] < 0))
    d[flip] *= -1.0
    ed = np.unique(np.round(d, 6), axis=0)
    return verts, fn, ed


def separation(a: TriMesh, b: TriMesh) -> float:
    """Exact separation distance of two convex solids (negative bound when
    they interpenetrate). Witness directions for convex polytopes are face
    normals and edge-pair cross products, so the SAT axis sweep is exact."""
    va, fa, ea = _sat_features(a)
    vb, fb, eb = _sat_features(b)
    cross = np.cross(ea[:, None, :], eb[None, :, :]).reshape(-1, 3)
    ln = np.linalg.norm(cross, axis=1)
    cross = cross[ln > 1e-9] / ln[ln > 1e-9, None]
    axes = np.vstack([fa, fb, cross])
    pa = axes @ va.T
    pb = axes @ vb.T
    gaps = np.maximum(
        pb.min(axis=1) - pa.max(axis=1), pa.min(axis=1) - pb.max(axis=1)
    )
    return float(gaps.max())


def _bounding_spheres(cells: dict[int, Cell]):
    ids = sorted(cells)
    centers = np.array(
        [cells[i].solid_extended.vertices.mean(axis=0) for i in ids]
    )
    radii = np.array(
        [
            np.linalg.norm(
                cells[i].solid_extended.vertices - centers[k], axis=1
            ).max()
            for k, i in enumerate(ids)
        ]
    )
    return ids, centers, radii


def _violating_pairs(cells: dict[int, Cell], wall: float) -> list[tuple[int, int]]:
    if len(cells) < 2:
        return []
    ids, centers, radii = _bounding_spheres(cells)
    from scipy.spatial import cKDTree

    tree = cKDTree(centers)
    pad = radii.max() * 2 + wall
    out = []
    for k, j in sorted(tree.query_pairs(pad)):
        ia, ib = ids[k], ids[j]
        if np.linalg.norm(centers[k] - centers[j]) > radii[k] + radii[j] + wall:
            continue
        if separation(cells[ia].solid_extended, cells[ib].solid_extended) < wall:
            out.append((ia, ib))
    return out


def resolve_overlaps(
    cells: list[Cell],
    *,
    shell: ShellModel,
    spec: CellSpec,
    profile: PrinterProfile,
    max_rounds: int = 5,
) -> list[Cell]:
    """Shrink intersecting neighbors by 0.9 per round until every pair has
    at least one extrusion width of wall. Cells stop shrinking at the 2.5 mm
    inscribed floor; pairs that still conflict after the ladder lose members
    one at a time (highest conflict count first) until the rest are clear."""
    wall = profile.extrusion_width
    state: dict[int, Cell] = {c.id: c for c in cells}
    original = {c.id: c for c in cells}
    active = dict(state)
    excluded: set[int] = set()

    for _ in range(max_rounds):
        bad_pairs = _violating_pairs(active, wall)
        if not bad_pairs:
            break
        progressed = False
        for i in sorted({k for pair in bad_pairs for k in pair}):
            new_cs = active[i].cross_section * 0.9
            if inscribed_diameter(spec.shape, new_cs) < INSCRIBED_MIN - 1e-9:
                continue  # already at the floor, neighbors may still shrink
            smaller = loft_cell(
                active[i].center,
                active[i].normal,
                spec,
                shell,
                ring=active[i].ring,
                cross_section=new_cs,
            )
            active[i] = replace(smaller, id=i)
            progressed = True
        if not progressed:
            break

    # whatever still conflicts cannot shrink its way out; drop as few cells
    # as possible, highest conflict count first
    bad_pairs = _violating_pairs(active, wall)
    if bad_pairs:
        log.warning(
            "%d pairs still conflict after %d shrink rounds; excluding",
            len(bad_pairs),
            max_rounds,
        )
    while bad_pairs:
        deg: dict[int, int] = {}
        for a, b in bad_pairs:
            deg[a] = deg.get(a, 0) + 1
            deg[b] = deg.get(b, 0) + 1
        victim = max(deg, key=lambda i: (deg[i], i))
        excluded.add(victim)
        active.pop(victim)
        bad_pairs = [p for p in bad_pairs if victim not in p]

    out = []
    for cid in sorted(state):
        if cid in excluded:
            out.append(replace(original[cid], status="overlapping"))
        else:
            cell = active[cid]
            status = (
                "shrunk"
                if cell.cross_section < original[cid].cross_section - 1e-12
                else "ok"
            )
            out.append(replace(cell, status=status))
    return out


# ---------------------------------------------------------------------------
# assembly


def assemble(
    shell: ShellModel, cells: list[Cell], projection_misses: int = 0
) -> DisplayModel:
    """Carve the cavities and concatenate the printable sandwich.

    The three shell solids touch only at shared surfaces, so the printable
    model is their concatenation; only body minus cells needs a boolean.
    A whole-batch subtraction is tried first; if the batch fails, cells are
    subtracted one at a time and the offender is marked boolean_failed and
    left solid (a blank region on the finished display).
    """
    cells = list(cells)
    active = [c for c in cells if c.status in ("ok", "shrunk")]
    failed_ids: set[int] = set()

    porous = shell.body
    if active:
        try:
            porous = difference(
                shell.body, concat([c.solid_extended for c in active])
            )
        except BooleanFailure:
            log.warning("batch cavity subtraction failed; retrying per cell")
            porous = shell.body
            for cell in active:
                try:
                    porous = difference(porous, cell.solid_extended)
                except BooleanFailure as exc:
                    log.warning("cell %d subtraction failed: %s", cell.id, exc)
                    failed_ids.add(cell.id)

    if failed_ids:
        cells = [
            replace(c, status="boolean_failed") if c.id in failed_ids else c
            for c in cells
        ]

    printable = concat([shell.s_out, shell.s_in, porous])
    if not printable.is_closed:
        raise BooleanFailure(
            "assembled printable model is not closed", open_edges=True
        )

    report = {status: 0 for status in STATUSES}
    for c in cells:
        report[c.status] += 1
    report["projection_miss"] = projection_misses
    report["placed"] = len(cells) + projection_misses
    return DisplayModel(
        shell=shell, cells=tuple(cells), printable=printable, report=report
    )
