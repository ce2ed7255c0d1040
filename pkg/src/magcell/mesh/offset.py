"""Surface offsetting along area-weighted vertex normals."""

from __future__ import annotations

import logging

import numpy as np

from ..errors import OffsetCollapse
from .core import TriMesh

log = logging.getLogger(__name__)


def offset_mesh(mesh: TriMesh, distance: float, check_self_intersection: bool = True) -> TriMesh:
    """Displace every vertex by ``distance`` along its vertex normal.

    Positive distances grow the solid, negative ones shrink it. Shrinking past
    the local thickness inverts the mesh and raises OffsetCollapse. Outward
    offsets across concave creases can self-intersect; that is reported as a
    warning and the mesh is still returned, since downstream booleans and
    volume sums stay usable for the mild crease cases a display shell hits.
    """
    distance = float(distance)
    if distance == 0.0:
        return mesh
    out = TriMesh(mesh.vertices + distance * mesh.vertex_normals, mesh.faces)

    vol_before = mesh.signed_volume()
    vol_after = out.signed_volume()
    if vol_before > 0 and vol_after <= 0:
        raise OffsetCollapse(
            f"offset by {distance} mm inverted the mesh "
            f"(volume {vol_before:.3f} -> {vol_after:.3f} mm^3)",
            distance=distance,
            volume_before=vol_before,
            volume_after=vol_after,
        )
    if distance < 0:
        # a collapse can also show up as flipped faces before volume goes negative
        flipped = np.einsum("ij,ij->i", out.face_cross, mesh.face_cross) < 0
        frac = float(np.count_nonzero(flipped)) / max(1, len(flipped))
        if frac > 0.05:
            raise OffsetCollapse(
                f"offset by {distance} mm flipped {frac:.1%} of faces",
                distance=distance,
                flipped_fraction=frac,
            )

    if check_self_intersection:
        from .boolean import self_intersecting_pairs

        pairs = self_intersecting_pairs(out, limit=1)
        if len(pairs):
            log.warning(
                "offset by %.3f mm self-intersects (e.g. faces %d and %d); "
                "downstream booleans may reject the region",
                distance,
                pairs[0][0],
                pairs[0][1],
            )
    return out
