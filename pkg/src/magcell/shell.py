"""Shell construction: screens, cell body, and the surfaces cells attach to.

A display is a sandwich of three solids built from the input surface M:
an inner screen, a cell body of depth H_cell that the cavities are carved
from, and an outer screen. The three solids touch at shared offset
surfaces, so the printable model is their plain concatenation; no boolean
union is needed and parity queries still work.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .constraints import CellSpec, validate_spec, PrinterProfile
from .errors import SpecInvalid
from .mesh.core import TriMesh, concat, weld
from .mesh.offset import offset_mesh

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ShellModel:
    """The shell solids plus the two reference surfaces cells span.

    placement_surface is where cell centers live (outer face of the body),
    cell_floor is what the inner cell caps project onto (inner face of the
    body). Both are surfaces, not solids; in single-sided mode they are
    open sheets.
    """

    m: TriMesh
    m_prime: TriMesh
    s_out: TriMesh
    s_in: TriMesh
    body: TriMesh
    placement_surface: TriMesh
    cell_floor: TriMesh
    single_sided: bool = False

    def solids(self) -> dict[str, TriMesh]:
        return {"s_out": self.s_out, "s_in": self.s_in, "body": self.body}


def _solid_between(outer: TriMesh, inner: TriMesh) -> TriMesh:
    """Closed solid bounded by two nested closed surfaces."""
    return concat([outer, inner.flipped()])


def extrude_sheet(sheet: TriMesh, d0: float, d1: float) -> TriMesh:
    """Closed slab between two normal offsets of an open sheet.

    The sheet must be an oriented manifold with boundary. Side walls run
    along the boundary polyline; winding keeps the solid positive for
    d1 > d0.
    """
    if sheet.is_closed or len(sheet.boundary_edges) == 0:
        raise SpecInvalid("extrude_sheet needs an open sheet with a boundary")
    if not d1 > d0:
        raise SpecInvalid(f"extrude_sheet needs d1 > d0, got {d0}..{d1}")
    n = sheet.vertex_normals
    vb = sheet.vertices + d0 * n
    vt = sheet.vertices + d1 * n
    nv = len(sheet.vertices)
    verts = np.vstack([vb, vt])
    bottom = sheet.faces[:, ::-1]
    top = sheet.faces + nv

    # directed boundary edges, in face traversal order (material on the left)
    directed = set()
    for a, b, c in sheet.faces:
        directed.update(((int(a), int(b)), (int(b), int(c)), (int(c), int(a))))
    walls = []
    for a, b in sorted(directed):
        if (b, a) in directed:
            continue
        walls.append([a, b, b + nv])
        walls.append([a, b + nv, a + nv])
    faces = np.vstack([bottom, top, np.array(walls, dtype=np.int64)])
    return weld(verts, faces)


def build_shell(
    mesh: TriMesh,
    spec: CellSpec,
    *,
    offset_inward: bool = False,
    profile: PrinterProfile | None = None,
) -> ShellModel:
    """Turn a surface model into the three shell solids.

    Closed meshes grow outward by default (the displayed surface stays
    where the model was); offset_inward carves into the model instead so
    outer dimensions are preserved. Open sheets are treated single-sided:
    the sandwich is extruded along the sheet normals.
    """
    violations = validate_spec(spec, profile or PrinterProfile())
    if violations:
        raise SpecInvalid(
            "; ".join(v.message for v in violations),
            violations=[v.to_dict() for v in violations],
        )
    t = spec.screen_thickness
    h = spec.cell_depth

    if mesh.is_closed:
        if offset_inward:
            return _shell_inward(mesh, t, h)
        return _shell_outward(mesh, t, h)
    if len(mesh.boundary_edges) > 0 and not mesh.has_nonmanifold_edges:
        return _shell_single_sided(mesh, t, h)
    raise SpecInvalid(
        "input mesh is neither closed nor an open manifold sheet; "
        "repair it before shelling"
    )


def _shell_outward(m: TriMesh, t: float, h: float) -> ShellModel:
    m_prime = offset_mesh(m, h)
    outer = offset_mesh(m_prime, t)
    inner = offset_mesh(m, -t)
    return ShellModel(
        m=m,
        m_prime=m_prime,
        s_out=_solid_between(outer, m_prime),
        s_in=_solid_between(m, inner),
        body=_solid_between(m_prime, m),
        placement_surface=m_prime,
        cell_floor=m,
    )


def _shell_inward(m: TriMesh, t: float, h: float) -> ShellModel:
    m_prime = offset_mesh(m, -t)
    floor = offset_mesh(m, -t - h)
    inner = offset_mesh(m, -t - h - t)
    return ShellModel(
        m=m,
        m_prime=m_prime,
        s_out=_solid_between(m, m_prime),
        s_in=_solid_between(floor, inner),
        body=_solid_between(m_prime, floor),
        placement_surface=m_prime,
        cell_floor=floor,
    )


def _shell_single_sided(m: TriMesh, t: float, h: float) -> ShellModel:
    n = m.vertex_normals
    lifted = lambda d: TriMesh(m.vertices + d * n, m.faces)
    return ShellModel(
        m=m,
        m_prime=lifted(t + h),
        s_out=extrude_sheet(m, t + h, t + h + t),
        s_in=extrude_sheet(m, 0.0, t),
        body=extrude_sheet(m, t, t + h),
        placement_surface=lifted(t + h),
        cell_floor=lifted(t),
        single_sided=True,
    )
