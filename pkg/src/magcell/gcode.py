"""Layer-structured G-code parsing and injection splicing.

The parser keeps every original byte: lines are stored verbatim
(terminators included) and grouped into prelude / layers / postlude, so
emitting an unmodified program reproduces the input exactly. Splicing
appends, after each layer that receives injections, a switch to the
liquid tool with an over-purge at the dump area, the injection blocks in
plan order, and a switch back with a brush wipe and filament re-prime.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace

from .constraints import PrinterProfile
from .errors import LayerMismatch, NoLayersFound, OutOfBed
from .planner import InjectionPlan, InjectionPoint

LAYER_MARK = ";LAYER:"
END_MARK = ";End of Gcode"
RETRACT_FEEDRATE = 1800.0  # mm/min for filament retract and re-prime
BRUSH_WIPE_LENGTH = 20.0  # mm, one +x pass over the wire brush

_WORD = re.compile(r"([A-Za-z])([-+]?[0-9]*\.?[0-9]+)")


@dataclass(frozen=True)
class EState:
    """Extruder bookkeeping at a point in the program: whether E words are
    relative, and the last logical E value, so a splice can restore both."""

    relative: bool = False
    value: float = 0.0


@dataclass(frozen=True)
class Layer:
    index: int
    z: float | None
    commands: tuple
    e_state: EState = EState()


@dataclass(frozen=True)
class GcodeProgram:
    prelude: tuple
    layers: tuple
    postlude: tuple
    flavor: str | None = None
    newline: str = "\n"

    def text(self) -> str:
        parts = list(self.prelude)
        for layer in self.layers:
            parts.extend(layer.commands)
        parts.extend(self.postlude)
        return "".join(parts)


@dataclass(frozen=True)
class InjectionBlock:
    cell_id: int
    commands: tuple


def _words(line: str) -> dict:
    """G-code words on a line, comments stripped; empty for pure comments."""
    code = line.split(";", 1)[0]
    if not code.strip():
        return {}
    return {m.group(1).upper(): float(m.group(2)) for m in _WORD.finditer(code)}


def _track(lines, state: EState) -> EState:
    """Advance extruder state across ``lines``."""
    relative, value = state.relative, state.value
    for line in lines:
        w = _words(line)
        if not w:
            continue
        g = w.get("G")
        m = w.get("M")
        if m == 82:
            relative = False
        elif m == 83:
            relative = True
        elif g == 90:
            relative = False
        elif g == 91:
            relative = True
        elif g == 92 and "E" in w:
            value = w["E"]
        elif g in (0.0, 1.0) and "E" in w:
            value = value + w["E"] if relative else w["E"]
    return EState(relative, value)


def parse(text: str) -> GcodeProgram:
    """Split slicer G-code into prelude, layers, and postlude, losslessly.

    Cura layer comments are the primary structure; files without them fall
    back to starting a new layer at every print move that raises Z. Raises
    NoLayersFound when neither yields a single layer.
    """
    lines = text.splitlines(keepends=True)
    newline = "\r\n" if lines and lines[0].endswith("\r\n") else "\n"
    flavor = None
    for line in lines[:20]:
        low = line.lower()
        if low.startswith(";flavor:"):
            flavor = line.split(":", 1)[1].strip()
        elif "cura" in low and flavor is None:
            flavor = "cura"

    marked = any(line.startswith(LAYER_MARK) for line in lines)
    prelude: list = []
    layers: list = []
    postlude: list = []
    current: list | None = None
    current_z: float | None = None
    in_postlude = False

    if marked:
        for line in lines:
            if in_postlude:
                postlude.append(line)
                continue
            if line.startswith(END_MARK):
                in_postlude = True
                postlude.append(line)
                continue
            if line.startswith(LAYER_MARK):
                if current is not None:
                    layers.append((current_z, current))
                current = [line]
                current_z = None
                continue
            if current is None:
                prelude.append(line)
                continue
            current.append(line)
            if current_z is None:
                w = _words(line)
                if w.get("G") in (0.0, 1.0) and "Z" in w:
                    current_z = w["Z"]
    else:
        last_z = None
        for line in lines:
            if in_postlude:
                postlude.append(line)
                continue
            if line.startswith(END_MARK):
                in_postlude = True
                postlude.append(line)
                continue
            w = _words(line)
            is_print_move = w.get("G") in (0.0, 1.0)
            z = w.get("Z") if is_print_move else None
            if z is not None and (last_z is None or z > last_z):
                if current is not None:
                    layers.append((current_z, current))
                current = [line]
                current_z = z
                last_z = z
                continue
            (prelude if current is None else current).append(line)
        # files ending before any Z move keep everything in the prelude

    if current is not None:
        layers.append((current_z, current))
    if not layers:
        raise NoLayersFound(
            "no layer markers and no Z moves; cannot anchor injections"
        )

    # carry z forward over layers that never move Z, and attach extruder
    # state snapshots so splicing can restore the extruder afterwards
    built = []
    state = _track(prelude, EState())
    prev_z = None
    for index, (z, commands) in enumerate(layers):
        state = _track(commands, state)
        if z is None:
            z = prev_z
        prev_z = z
        built.append(Layer(index=index, z=z, commands=tuple(commands), e_state=state))
    return GcodeProgram(
        prelude=tuple(prelude),
        layers=tuple(built),
        postlude=tuple(postlude),
        flavor=flavor,
        newline=newline,
    )


def emit(program: GcodeProgram) -> str:
    return program.text()


def _fmt(value: float, nd: int = 5) -> str:
    out = f"{value:.{nd}f}".rstrip("0").rstrip(".")
    return out if out not in ("", "-0") else "0"


def _check_bed(profile: PrinterProfile, x: float, y: float, what: str) -> None:
    bx, by = profile.bed_size
    if not (0.0 <= x <= bx and 0.0 <= y <= by):
        raise OutOfBed(
            f"{what} target ({x:.2f}, {y:.2f}) leaves the {bx:.0f}x{by:.0f} bed",
            x=x,
            y=y,
        )


def make_injection_block(
    point: InjectionPoint, profile: PrinterProfile
) -> InjectionBlock:
    """G-code for one cell fill: travel, engage, plunge, retract, disengage.

    Travel targets subtract the injector's XY offset so the syringe tip,
    not the FDM nozzle, lands on the opening. The plunge E word is the fill
    volume times the profile calibration; a fixed-volume retract follows
    every injection so the needle does not drool during the next travel.
    """
    dx, dy, _dz = profile.injector_offset
    tx, ty = point.x - dx, point.y - dy
    _check_bed(profile, tx, ty, f"cell {point.cell_id} injection")
    nl = "\n"
    travel = f"G0 F{_fmt(profile.travel_feedrate)} X{_fmt(tx)} Y{_fmt(ty)}"
    if profile.injection_clearance > 0:
        travel += f" Z{_fmt(point.z + profile.injection_clearance)}"
    # 7 decimals on the plunge so the metered total stays within 1e-6
    # relative of the plan volume even when hundreds of cells accumulate
    plunge = point.fill_volume * profile.e_per_mm3
    retract = profile.retraction_volume * profile.e_per_mm3
    commands = (
        f";inject cell={point.cell_id} fill={_fmt(point.fill_volume)}mm3{nl}",
        travel + nl,
        profile.engage_macro + nl,
        f"G1 E{_fmt(plunge, 7)} F{_fmt(profile.injection_feedrate)}{nl}",
        f"G1 E-{_fmt(retract)} F{_fmt(profile.injection_feedrate)}{nl}",
        profile.disengage_macro + nl,
    )
    return InjectionBlock(cell_id=point.cell_id, commands=commands)


def _switch_to_injector(profile: PrinterProfile) -> list:
    """Extrusion -> injection: park filament pressure, purge stale liquid."""
    nl = "\n"
    dxp, dyp = profile.dump_area
    purge = profile.purge_volume * profile.e_per_mm3
    return [
        f";switch extrusion->injection{nl}",
        f"M83{nl}",
        f"G1 E-{_fmt(profile.filament_retract)} F{_fmt(RETRACT_FEEDRATE)}{nl}",
        f"T1{nl}",
        f"M83{nl}",
        f"G0 F{_fmt(profile.travel_feedrate)} X{_fmt(dxp)} Y{_fmt(dyp)}{nl}",
        f"G1 E{_fmt(purge)} F{_fmt(profile.injection_feedrate)}{nl}",
    ]


def _switch_to_extruder(profile: PrinterProfile, state: EState) -> list:
    """Injection -> extrusion: wipe the needle, re-prime, restore E state."""
    nl = "\n"
    bx, by = profile.brush_area
    wx = bx + BRUSH_WIPE_LENGTH
    _check_bed(profile, wx, by, "brush wipe")
    out = [
        f";switch injection->extrusion{nl}",
        f"G0 F{_fmt(profile.travel_feedrate)} X{_fmt(bx)} Y{_fmt(by)}{nl}",
        f"G0 F{_fmt(profile.travel_feedrate)} X{_fmt(wx)} Y{_fmt(by)}{nl}",
        f"T0{nl}",
        f"M83{nl}",
        f"G1 E{_fmt(profile.filament_retract)} F{_fmt(RETRACT_FEEDRATE)}{nl}",
    ]
    if state.relative:
        out.append(f"M83{nl}")
    else:
        out.append(f"M82{nl}")
        out.append(f"G92 E{_fmt(state.value)}{nl}")
    return out


def splice(
    program: GcodeProgram, plan: InjectionPlan, profile: PrinterProfile
) -> GcodeProgram:
    """Insert the plan's injections after their matching layers.

    Every injection layer gets exactly one tool-switch pair regardless of
    how many cells it fills. Plan points must land within half a layer
    height of a parsed layer z; anything else is a LayerMismatch, because
    injecting through the wrong layer seals liquid in the wrong place.
    """
    if not plan.points:
        return program
    # strictly inside the half-height band; a point exactly between two
    # layers is ambiguous and must be rejected even after float rounding
    half = profile.layer_height / 2.0 - 1e-9
    groups: dict[int, list] = {}
    unmatched: list = []
    for point in plan.points:
        best_i, best_err = None, half
        for i, layer in enumerate(program.layers):
            if layer.z is None:
                continue
            err = abs(layer.z - point.z)
            if err < best_err:
                best_i, best_err = i, err
        if best_i is None:
            unmatched.append({"cell_id": point.cell_id, "z": point.z})
        else:
            groups.setdefault(best_i, []).append(point)
    if unmatched:
        raise LayerMismatch(
            f"{len(unmatched)} injection(s) align with no printed layer",
            unmatched=unmatched,
        )

    newline = program.newline
    layers = list(program.layers)
    for i, points in sorted(groups.items()):
        layer = layers[i]
        inserted: list = []
        inserted.extend(_switch_to_injector(profile))
        for point in points:
            inserted.extend(make_injection_block(point, profile).commands)
        inserted.extend(_switch_to_extruder(profile, layer.e_state))
        if newline != "\n":
            inserted = [c.replace("\n", newline) for c in inserted]
        layers[i] = replace(layer, commands=layer.commands + tuple(inserted))
    return replace(program, layers=tuple(layers))
