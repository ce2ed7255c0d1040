"""Preview scene export for the browser viewer.

The scene is plain JSON: one flattened triangle soup per cell plus a
status color key, so the client needs no mesh decoder. Shell surfaces are
decimated to a triangle budget with grid vertex clustering; cells are
small and ship untouched. Coordinates are rounded to 1e-3 mm, which is
invisible at preview scale and keeps the payload compact.
"""

from __future__ import annotations

import json

import numpy as np

from .cells import STATUSES, Cell
from .mesh.core import TriMesh, concat, weld
from .shell import ShellModel

SCHEMA = "magcell-scene/1"
SHELL_TRIANGLE_BUDGET = 50_000

STATUS_COLORS = {
    "ok": "#4caf50",
    "shrunk": "#fbc02d",
    "overlapping": "#fb8c00",
    "boolean_failed": "#8e24aa",
    "unplannable": "#e53935",
}


def decimate(mesh: TriMesh, budget: int) -> TriMesh:
    """Vertex-clustering decimation to at most ``budget`` faces.

    Quantizes vertices to a grid and collapses everything in a voxel to
    the cluster mean, coarsening the grid until the face count fits. Only
    for preview display; the result is not guaranteed watertight.
    """
    if mesh.n_faces <= budget:
        return mesh
    lo, hi = mesh.bounds
    cell = float(np.linalg.norm(hi - lo)) / 256.0
    out = mesh
    for _ in range(24):
        keys = np.floor(mesh.vertices / cell).astype(np.int64)
        _, labels = np.unique(keys, axis=0, return_inverse=True)
        k = labels.max() + 1
        sums = np.zeros((k, 3))
        np.add.at(sums, labels, mesh.vertices)
        counts = np.bincount(labels, minlength=k).astype(float)
        verts = sums / counts[:, None]
        faces = labels[mesh.faces]
        good = (
            (faces[:, 0] != faces[:, 1])
            & (faces[:, 1] != faces[:, 2])
            & (faces[:, 2] != faces[:, 0])
        )
        faces = faces[good]
        if len(faces):
            # drop duplicate faces left by collapsed tunnels
            key = np.sort(faces, axis=1)
            _, first = np.unique(key, axis=0, return_index=True)
            faces = faces[np.sort(first)]
        out = weld(verts, faces)
        if out.n_faces <= budget:
            return out
        cell *= 1.6
    return out


def _soup(mesh: TriMesh) -> list:
    tris = np.round(mesh.triangles.reshape(-1), 3)
    # -0.0 prints as -0.0 in JSON; normalize for byte-stable output
    tris = tris + 0.0
    return tris.tolist()


def build_scene(
    shell: ShellModel,
    cells: list[Cell] | tuple,
    report: dict | None = None,
    plan=None,
) -> dict:
    """Scene payload for the viewer.

    ``report`` defaults to counting the cells directly (the preview-only
    path has no assembled model). When ``plan`` is given, cells it could
    not plan are recolored ``unplannable`` so the viewer flags them.
    """
    unplannable = set()
    if plan is not None:
        unplannable = {u.cell_id for u in plan.unplannable}

    cell_entries = []
    counts = {status: 0 for status in STATUSES}
    counts["unplannable"] = 0
    for cell in cells:
        status = cell.status
        if cell.id in unplannable and status in ("ok", "shrunk"):
            status = "unplannable"
        counts[status] += 1
        cell_entries.append(
            {
                "id": cell.id,
                "status": status,
                "center": [round(float(v), 3) for v in cell.center],
                "triangles": _soup(cell.solid),
            }
        )

    shell_mesh = decimate(
        concat([shell.s_out, shell.s_in, shell.body]), SHELL_TRIANGLE_BUDGET
    )
    lo, hi = shell_mesh.bounds if shell_mesh.n_faces else ((0, 0, 0), (0, 0, 0))
    totals = dict(report) if report else {}
    totals.setdefault("placed", len(cell_entries))
    for status in STATUSES:
        totals.setdefault(status, sum(1 for c in cells if c.status == status))

    return {
        "schema": SCHEMA,
        "units": "mm",
        "bounds": {
            "min": [round(float(v), 3) for v in lo],
            "max": [round(float(v), 3) for v in hi],
        },
        "colors": dict(STATUS_COLORS),
        "shell": {
            "triangle_count": shell_mesh.n_faces,
            "triangles": _soup(shell_mesh),
        },
        "cells": cell_entries,
        "counts": counts,
        "report": totals,
    }


def scene_json(scene: dict) -> str:
    return json.dumps(scene, sort_keys=True, separators=(",", ":"))
