"""Triangle mesh core: IO, measures, offsets, sections, booleans, remeshing."""

from .boolean import boolean, difference, intersection, self_intersecting_pairs, union
from .core import TriMesh, concat, weld
from .io import load_mesh, mesh_bytes, save_mesh
from .offset import offset_mesh
from .remesh import remesh_isotropic
from .slicing import (
    distance_to_loops,
    loop_area,
    point_in_loops,
    section_area,
    slice_at,
)
from .spatial import contains_points

__all__ = [
    "TriMesh",
    "boolean",
    "concat",
    "contains_points",
    "difference",
    "distance_to_loops",
    "intersection",
    "load_mesh",
    "loop_area",
    "mesh_bytes",
    "offset_mesh",
    "point_in_loops",
    "remesh_isotropic",
    "save_mesh",
    "section_area",
    "self_intersecting_pairs",
    "slice_at",
    "union",
    "weld",
]
