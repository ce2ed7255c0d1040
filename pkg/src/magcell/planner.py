"""Injection planning: where and when the syringe fills each cell.

Each carved cell is sliced with horizontal planes, one per FDM layer,
from the top down. The first plane whose cross-section admits the
injector needle (largest inscribed circle strictly wider than the nozzle)
becomes the cell's injection point, and the fill volume is the part of
the cell below that plane. Descending costs liquid, so the search stops
once less than the configured fraction of the cell would be filled; such
cells are reported unplannable and print dry.
"""

from __future__ import annotations

import heapq
import json
import logging
import math
from dataclasses import dataclass

import numpy as np

from .constraints import PrinterProfile
from .errors import EmptySection
from .mesh.slicing import slice_at, signed_distance_in_section

log = logging.getLogger(__name__)

FILL_FLOOR = 0.8  # fraction of the cell volume that must end up below the needle
SYRINGE_CAPACITY = 30_000.0  # mm^3; one 30 ml syringe per print
LIC_RESOLUTION = 0.01  # mm, quadtree cell size at which the circle search stops

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class InjectionPoint:
    cell_id: int
    x: float
    y: float
    z: float
    layer_index: int
    fill_volume: float
    inscribed_diameter: float

    def to_dict(self) -> dict:
        return {
            "cell_id": self.cell_id,
            "x": round(self.x, 6),
            "y": round(self.y, 6),
            "z": round(self.z, 6),
            "layer_index": self.layer_index,
            "fill_volume_mm3": round(self.fill_volume, 6),
            "inscribed_diameter_mm": round(self.inscribed_diameter, 6),
        }


@dataclass(frozen=True)
class Unplannable:
    """Planning verdict for a cell the needle cannot reach. A value, not
    an exception: dry cells are a print-quality warning, not a failure."""

    cell_id: int
    reason: str

    def to_dict(self) -> dict:
        return {"cell_id": self.cell_id, "reason": self.reason}


@dataclass(frozen=True)
class InjectionPlan:
    points: tuple
    unplannable: tuple
    total_volume: float

    def to_dict(self) -> dict:
        return {
            "points": [p.to_dict() for p in self.points],
            "unplannable": [u.to_dict() for u in self.unplannable],
            "total_volume_mm3": round(self.total_volume, 6),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def largest_inscribed_circle(section) -> tuple[tuple[float, float], float]:
    """Pole of inaccessibility of a planar section (holes respected).

    Quadtree refinement: square cells are ranked by the best distance any
    of their points could reach (center distance + half-diagonal) and
    split until that bound cannot beat the champion or the cell is smaller
    than LIC_RESOLUTION. Ties resolve by insertion order, so the result is
    deterministic; only the radius is canonical.
    """
    loops = [np.asarray(lp, dtype=np.float64) for lp in section]
    if not loops or sum(len(lp) for lp in loops) == 0:
        raise EmptySection("cannot inscribe a circle in an empty section")
    pts = np.concatenate(loops)
    minx, miny = pts.min(axis=0)
    maxx, maxy = pts.max(axis=0)
    size = min(maxx - minx, maxy - miny)
    if size <= 0:
        return (float(minx), float(miny)), 0.0

    heap: list = []
    counter = 0

    def push(cx: float, cy: float, half: float) -> None:
        nonlocal counter
        d = signed_distance_in_section((cx, cy), loops)
        heapq.heappush(heap, (-(d + half * _SQRT2), counter, cx, cy, half, d))
        counter += 1

    half = size / 2.0
    x = float(minx)
    while x < maxx:
        y = float(miny)
        while y < maxy:
            push(x + half, y + half, half)
            y += size
        x += size
    cx0, cy0 = pts.mean(axis=0)
    push(float(cx0), float(cy0), 0.0)

    best_d, best_x, best_y = -math.inf, float(minx), float(miny)
    while heap:
        neg_pot, _, cx, cy, hf, d = heapq.heappop(heap)
        if d > best_d:
            best_d, best_x, best_y = d, cx, cy
        if -neg_pot - best_d <= 1e-12 or hf * 2.0 < LIC_RESOLUTION:
            continue
        q = hf / 2.0
        for dx in (-q, q):
            for dy in (-q, q):
                push(cx + dx, cy + dy, q)
    return (best_x, best_y), max(best_d, 0.0)


def plan_cell(cell, profile: PrinterProfile, *, fill_floor: float = FILL_FLOOR):
    """Find the highest layer plane through ``cell`` the needle fits into.

    Planes are absolute multiples of the layer height, walked downward
    from the first one strictly below the cell's top. Returns an
    InjectionPoint, or Unplannable once filling from the next plane would
    leave more than ``1 - fill_floor`` of the cell empty.
    """
    solid = cell.solid
    h = profile.layer_height
    volume = float(cell.volume)
    zmin, zmax = solid.z_range
    needle = profile.injector_nozzle_diameter + profile.injection_clearance

    k = math.ceil(zmax / h - 1e-9) - 1
    while True:
        z = k * h
        if z <= zmin:
            return Unplannable(cell.id, "no_opening")
        fill = solid.partial_volume_below(z)
        if fill < fill_floor * volume - 1e-12:
            return Unplannable(cell.id, "no_opening")
        try:
            section = slice_at(solid, z)
        except EmptySection:
            k -= 1
            continue
        (x, y), r = largest_inscribed_circle(section)
        if 2.0 * r > needle:
            return InjectionPoint(
                cell_id=cell.id,
                x=float(x),
                y=float(y),
                z=float(z),
                layer_index=k,
                fill_volume=float(fill),
                inscribed_diameter=2.0 * r,
            )
        k -= 1


def build_plan(model, profile: PrinterProfile) -> InjectionPlan:
    """Plan every fillable cell and order the injections bottom-up.

    Points sort ascending by (z, cell_id); the sort is strict because ids
    are unique. Cells flagged during generation (overlapping, failed
    booleans) are skipped; they have no cavity to fill.
    """
    points: list[InjectionPoint] = []
    unplannable: list[Unplannable] = []
    for cell in model.cells:
        if cell.status not in ("ok", "shrunk"):
            continue
        verdict = plan_cell(cell, profile)
        if isinstance(verdict, InjectionPoint):
            points.append(verdict)
        else:
            unplannable.append(verdict)
    points.sort(key=lambda p: (p.z, p.cell_id))
    unplannable.sort(key=lambda u: u.cell_id)
    total = float(sum(p.fill_volume for p in points))
    if total > SYRINGE_CAPACITY:
        log.warning(
            "plan needs %.0f mm^3 of liquid; more than one %.0f mm^3 syringe",
            total,
            SYRINGE_CAPACITY,
        )
    if unplannable:
        log.warning(
            "%d cell(s) have no needle-sized opening and will print dry",
            len(unplannable),
        )
    return InjectionPlan(
        points=tuple(points), unplannable=tuple(unplannable), total_volume=total
    )
