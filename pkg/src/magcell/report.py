"""Run reports: aggregated JSON, a per-cell CSV, and summary figures.

Everything here works from the serialized artifacts (cell rows, plan
dict), not live geometry, so a report can be rebuilt from a finished
output directory without re-running the pipeline. Figures are rendered
with a fixed style and no timestamps to keep reruns byte-stable.
"""

from __future__ import annotations

import csv
import json
import math
import os

from .cells import STATUSES
from .constraints import SYRINGE_CAPACITY_MM3, CellSpec, PrinterProfile, envelope_limits

FIGURE_DPI = 110

PREFLIGHT = (
    "Slice with both tools configured: T0 extrudes filament, T1 drives the syringe E axis.",
    "Reduce print speed to 50-60% of the stock profile so screen layers bridge cleanly.",
    "Enable bridge settings; screen layers span open cells without support.",
    "Block supports inside the display region; cell cavities must print empty.",
    "Slicer layer height must equal the profile layer_height; injection planes are multiples of it.",
    "Verify the dump area and brush positions are clear of the part and of clips.",
    "Confirm syringe calibration (e_per_mm3) with a metered test dispense before the run.",
    "Home and level with the syringe disengaged; the engage macro assumes a clear tip.",
)


def _fill_stats(plan: dict | None) -> dict:
    if not plan:
        return {"points": 0, "layers": 0, "total_volume_mm3": 0.0, "syringe_loads": 0}
    points = plan.get("points", [])
    zs = sorted({round(p["z"], 6) for p in points})
    total = float(plan.get("total_volume_mm3", 0.0))
    return {
        "points": len(points),
        "layers": len(zs),
        "z_planes": zs,
        "total_volume_mm3": round(total, 6),
        "syringe_loads": math.ceil(total / SYRINGE_CAPACITY_MM3) if total else 0,
        "unplannable": len(plan.get("unplannable", [])),
    }


def build_report(
    spec: CellSpec,
    profile: PrinterProfile,
    cell_rows: list[dict],
    counts: dict,
    plan: dict | None = None,
    printable: dict | None = None,
) -> dict:
    """Aggregate one run into the report payload."""
    volumes = [r["volume_mm3"] for r in cell_rows]
    totals = {status: counts.get(status, 0) for status in STATUSES}
    totals["projection_miss"] = counts.get("projection_miss", 0)
    totals["placed"] = counts.get("placed", len(cell_rows))
    flagged = (
        totals["overlapping"] + totals["boolean_failed"] + totals["projection_miss"]
    )
    out = {
        "schema": "magcell-report/1",
        "units": {"length": "mm", "volume": "mm3", "weight": "g"},
        "spec": spec.to_dict(),
        "profile": {
            "layer_height": profile.layer_height,
            "injector_nozzle_diameter": profile.injector_nozzle_diameter,
            "injector_offset": list(profile.injector_offset),
            "e_per_mm3": profile.e_per_mm3,
            "bed_size": list(profile.bed_size),
        },
        "limits": envelope_limits(profile),
        "cells": {
            **totals,
            "cavity_volume_mm3": round(float(sum(volumes)), 6),
            "mean_volume_mm3": round(sum(volumes) / len(volumes), 6)
            if volumes
            else 0.0,
        },
        "flagged_fraction": round(flagged / totals["placed"], 6)
        if totals["placed"]
        else 0.0,
        "plan": _fill_stats(plan),
        "preflight": list(PREFLIGHT),
    }
    if printable:
        out["printable"] = printable
    if plan:
        out["cells"]["unplannable"] = len(plan.get("unplannable", []))
    return out


def write_cell_csv(path, cell_rows: list[dict], plan: dict | None = None) -> None:
    """One row per placed cell, joined with its injection if planned."""
    by_cell = {}
    for p in (plan or {}).get("points", []):
        by_cell[p["cell_id"]] = p
    fields = [
        "id",
        "x",
        "y",
        "z",
        "nx",
        "ny",
        "nz",
        "status",
        "volume_mm3",
        "cross_section_mm",
        "injection_z",
        "fill_volume_mm3",
        "inscribed_diameter_mm",
    ]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for r in sorted(cell_rows, key=lambda r: r["id"]):
            p = by_cell.get(r["id"], {})
            w.writerow(
                {
                    "id": r["id"],
                    "x": r["center"][0],
                    "y": r["center"][1],
                    "z": r["center"][2],
                    "nx": r["normal"][0],
                    "ny": r["normal"][1],
                    "nz": r["normal"][2],
                    "status": r["status"],
                    "volume_mm3": r["volume_mm3"],
                    "cross_section_mm": r["cross_section_mm"],
                    "injection_z": p.get("z", ""),
                    "fill_volume_mm3": p.get("fill_volume_mm3", ""),
                    "inscribed_diameter_mm": p.get("inscribed_diameter_mm", ""),
                }
            )


def _save(fig, path):
    fig.savefig(path, dpi=FIGURE_DPI, metadata={"Software": "magcell"})


def render_figures(out_dir, cell_rows: list[dict], plan: dict | None = None) -> list:
    """Status map, volume histogram, and injection profile under figures/."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    from .preview import STATUS_COLORS

    fig_dir = os.path.join(out_dir, "figures")
    os.makedirs(fig_dir, exist_ok=True)
    written = []

    unplannable = {u["cell_id"] for u in (plan or {}).get("unplannable", [])}

    fig, ax = plt.subplots(figsize=(6.0, 5.0))
    for status, color in STATUS_COLORS.items():
        xs, ys = [], []
        for r in cell_rows:
            s = r["status"]
            if s in ("ok", "shrunk") and r["id"] in unplannable:
                s = "unplannable"
            if s == status:
                xs.append(r["center"][0])
                ys.append(r["center"][1])
        if xs:
            ax.scatter(xs, ys, s=14, c=color, label=f"{status} ({len(xs)})")
    ax.set_aspect("equal")
    ax.set_xlabel("x (mm)")
    ax.set_ylabel("y (mm)")
    ax.set_title("cell status map")
    if cell_rows:
        ax.legend(loc="upper right", fontsize=8)
    path = os.path.join(fig_dir, "status_map.png")
    _save(fig, path)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    volumes = [r["volume_mm3"] for r in cell_rows]
    if volumes:
        ax.hist(volumes, bins=24, color="#607d8b", label="cavity volume")
    fills = [p["fill_volume_mm3"] for p in (plan or {}).get("points", [])]
    if fills:
        ax.hist(
            fills, bins=24, color="#4caf50", alpha=0.6, label="planned fill"
        )
    ax.set_xlabel("volume (mm3)")
    ax.set_ylabel("cells")
    ax.set_title("cell volumes")
    if volumes or fills:
        ax.legend(fontsize=8)
    path = os.path.join(fig_dir, "volume_hist.png")
    _save(fig, path)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    points = (plan or {}).get("points", [])
    if points:
        per_z: dict = {}
        for p in points:
            per_z[round(p["z"], 6)] = per_z.get(round(p["z"], 6), 0) + 1
        zs = sorted(per_z)
        ax.barh(zs, [per_z[z] for z in zs], height=0.12, color="#1976d2")
    ax.set_xlabel("injections")
    ax.set_ylabel("z (mm)")
    ax.set_title("injection profile")
    path = os.path.join(fig_dir, "injection_profile.png")
    _save(fig, path)
    plt.close(fig)
    written.append(path)
    return written


def write_report(
    out_dir,
    report: dict,
    cell_rows: list[dict],
    plan: dict | None = None,
    figures: bool = True,
) -> dict:
    """report.json + cells.csv (+ figures) in ``out_dir``; returns paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {}
    rp = os.path.join(out_dir, "report.json")
    with open(rp, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths["report"] = rp
    cp = os.path.join(out_dir, "cells.csv")
    write_cell_csv(cp, cell_rows, plan)
    paths["cells_csv"] = cp
    if figures:
        for fp in render_figures(out_dir, cell_rows, plan):
            paths[os.path.splitext(os.path.basename(fp))[0]] = fp
    return paths
