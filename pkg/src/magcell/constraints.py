"""Printability envelope checks and liquid mixture recipes.

The envelope bounds come from measured failure modes on the reference
machine: injector needle clearance below, overhang bridging above, screen
layers that seal in 2-3 passes, and a depth the magnet can still pull
powder across. All lengths mm, weights g.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

from .errors import SpecInvalid, ZeroRatio

INSCRIBED_MIN = 2.5
INSCRIBED_MAX = 6.5
SCREEN_MIN = 0.6
SCREEN_MAX = 1.0
DEPTH_MAX = 5.0
SYRINGE_CAPACITY_MM3 = 30000.0

SHAPES = ("circle", "square", "hexagon")

# polygon corner count per cross-section shape (circle is discretized)
SHAPE_SEGMENTS = {"circle": 24, "square": 4, "hexagon": 6}

_SQRT3_2 = 3.0**0.5 / 2.0


@dataclass(frozen=True)
class CellSpec:
    """Cross-section geometry of one cell plus the shell dimensions.

    cross_section is the circle diameter, square side, or hexagon
    across-corners diagonal; gap is wall thickness between neighboring
    cells; cell_depth and screen_thickness are the H values of the shell
    sandwich.
    """

    shape: str = "hexagon"
    cross_section: float = 4.0
    gap: float = 1.0
    cell_depth: float = 5.0
    screen_thickness: float = 0.6

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise SpecInvalid(
                f"unknown shape {self.shape!r}, expected one of {SHAPES}",
                shape=self.shape,
            )
        for name in ("cross_section", "gap", "cell_depth", "screen_thickness"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or value != value:
                raise SpecInvalid(f"{name} must be a number", field=name)
            if value <= 0 and name != "gap":
                raise SpecInvalid(f"{name} must be positive, got {value}", field=name)
            if name == "gap" and value < 0:
                raise SpecInvalid(f"gap must be >= 0, got {value}", field=name)

    @property
    def pitch(self) -> float:
        """Center-to-center spacing target: cross-section plus gap."""
        return self.cross_section + self.gap

    def inscribed(self) -> float:
        return inscribed_diameter(self.shape, self.cross_section)

    def with_cross_section(self, cross_section: float) -> "CellSpec":
        return CellSpec(
            self.shape, cross_section, self.gap, self.cell_depth, self.screen_thickness
        )

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PrinterProfile:
    """Machine geometry, injector calibration, and macro templates.

    injector_offset is the (dx, dy, dz) vector from the FDM nozzle tip to
    the syringe tip; travel targets subtract dx/dy so the syringe lands on
    the cell. dz is choreographed by the engage macro, not by travel moves,
    which keeps emitted Z words monotone.
    """

    fdm_nozzle_diameter: float = 0.4
    injector_nozzle_diameter: float = 2.1
    layer_height: float = 0.2
    max_overhang: float = 7.0
    injector_offset: tuple = (30.0, 0.0, 0.0)
    dump_area: tuple = (20.0, 200.0)
    brush_area: tuple = (60.0, 200.0)
    bed_size: tuple = (220.0, 220.0)
    engage_macro: str = "M98 P\"engage.g\""
    disengage_macro: str = "M98 P\"disengage.g\""
    retraction_volume: float = 10.0
    purge_volume: float = 40.0
    filament_retract: float = 5.0
    e_per_mm3: float = 0.01
    injection_feedrate: float = 120.0
    travel_feedrate: float = 6000.0
    injection_clearance: float = 0.0
    offset_inward: bool = False

    def __post_init__(self):
        for name in (
            "fdm_nozzle_diameter",
            "injector_nozzle_diameter",
            "layer_height",
            "max_overhang",
            "retraction_volume",
            "purge_volume",
            "filament_retract",
            "e_per_mm3",
            "injection_feedrate",
            "travel_feedrate",
        ):
            value = getattr(self, name)
            if not value > 0:
                raise SpecInvalid(f"{name} must be positive, got {value}", field=name)
        if self.injection_clearance < 0:
            raise SpecInvalid("injection_clearance must be >= 0")
        for name in ("dump_area", "brush_area"):
            x, y = getattr(self, name)
            bx, by = self.bed_size
            if not (0 <= x <= bx and 0 <= y <= by):
                raise SpecInvalid(
                    f"{name} ({x}, {y}) outside bed envelope {bx}x{by}", field=name
                )

    @property
    def extrusion_width(self) -> float:
        """Minimum printable wall; one extrusion line of the FDM nozzle."""
        return self.fdm_nozzle_diameter

    def to_dict(self) -> dict:
        d = asdict(self)
        d["injector_offset"] = list(self.injector_offset)
        d["dump_area"] = list(self.dump_area)
        d["brush_area"] = list(self.brush_area)
        d["bed_size"] = list(self.bed_size)
        return d


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    limit: float
    actual: float

    def to_dict(self) -> dict:
        return {
            "code": self.code,
            "message": self.message,
            "limit": self.limit,
            "actual": self.actual,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Violation":
        return cls(d["code"], d["message"], d["limit"], d["actual"])


def inscribed_diameter(shape: str, cross_section: float) -> float:
    """Inscribed-circle diameter of the cross-section polygon."""
    if cross_section <= 0:
        raise SpecInvalid(f"cross_section must be positive, got {cross_section}")
    if shape in ("circle", "square"):
        return float(cross_section)
    if shape == "hexagon":
        return float(cross_section) * _SQRT3_2
    raise SpecInvalid(f"unknown shape {shape!r}", shape=shape)


def circumscribed_radius(shape: str, cross_section: float) -> float:
    """Farthest corner distance from the polygon center."""
    if shape == "circle":
        return cross_section / 2.0
    if shape == "square":
        return cross_section / 2.0**0.5
    if shape == "hexagon":
        return cross_section / 2.0
    raise SpecInvalid(f"unknown shape {shape!r}", shape=shape)


def validate_spec(spec: CellSpec, profile: PrinterProfile) -> list[Violation]:
    """Printability violations, empty when the configuration prints."""
    out = []
    inscribed = spec.inscribed()
    if inscribed < INSCRIBED_MIN:
        out.append(
            Violation(
                "TooSmall",
                f"inscribed diameter {inscribed:.3f} mm is below the "
                f"{INSCRIBED_MIN} mm injection floor",
                INSCRIBED_MIN,
                inscribed,
            )
        )
    if inscribed > INSCRIBED_MAX:
        out.append(
            Violation(
                "TooLarge",
                f"inscribed diameter {inscribed:.3f} mm exceeds the "
                f"{INSCRIBED_MAX} mm overhang ceiling",
                INSCRIBED_MAX,
                inscribed,
            )
        )
    if spec.screen_thickness < SCREEN_MIN:
        out.append(
            Violation(
                "ScreenTooThin",
                f"screen {spec.screen_thickness:.3f} mm is below {SCREEN_MIN} mm",
                SCREEN_MIN,
                spec.screen_thickness,
            )
        )
    if spec.screen_thickness > SCREEN_MAX:
        out.append(
            Violation(
                "ScreenTooThick",
                f"screen {spec.screen_thickness:.3f} mm exceeds {SCREEN_MAX} mm",
                SCREEN_MAX,
                spec.screen_thickness,
            )
        )
    if spec.cell_depth > DEPTH_MAX:
        out.append(
            Violation(
                "TooDeep",
                f"cell depth {spec.cell_depth:.3f} mm exceeds {DEPTH_MAX} mm",
                DEPTH_MAX,
                spec.cell_depth,
            )
        )
    if spec.gap < profile.extrusion_width:
        out.append(
            Violation(
                "GapTooNarrow",
                f"gap {spec.gap:.3f} mm is below one extrusion width "
                f"({profile.extrusion_width:.3f} mm)",
                profile.extrusion_width,
                spec.gap,
            )
        )
    return out


def envelope_limits(profile: PrinterProfile | None = None) -> dict:
    """The printability envelope as data, for reports and the UI sliders."""
    profile = profile or PrinterProfile()
    per_shape = {}
    for shape in SHAPES:
        ratio = inscribed_diameter(shape, 1.0)
        per_shape[shape] = {
            "cross_section_min": INSCRIBED_MIN / ratio,
            "cross_section_max": INSCRIBED_MAX / ratio,
        }
    return {
        "inscribed_diameter": [INSCRIBED_MIN, INSCRIBED_MAX],
        "screen_thickness": [SCREEN_MIN, SCREEN_MAX],
        "cell_depth_max": DEPTH_MAX,
        "gap_min": profile.extrusion_width,
        "shapes": list(SHAPES),
        "cross_section": per_shape,
        "injector_nozzle_diameter": profile.injector_nozzle_diameter,
        "syringe_capacity_mm3": SYRINGE_CAPACITY_MM3,
    }


@dataclass(frozen=True)
class MixtureRecipe:
    """Absolute weights for one batch of display liquid.

    persistent is True when the image holds through handling, False when
    shaking erases it (and powder settles out within minutes), None when
    the ratio falls between the two measured reference points.
    """

    oil: float
    talc: float
    iron: float
    dye: float
    persistent: bool | None

    def to_dict(self) -> dict:
        return {
            "oil_g": self.oil,
            "talc_g": self.talc,
            "iron_g": self.iron,
            "dye_g": self.dye,
            "persistent": self.persistent,
        }


def mixture_for(total_weight: float, ratio) -> MixtureRecipe:
    """Split ``total_weight`` grams into oil/talc/iron/dye by weight parts.

    Persistence comes from the two measured reference mixtures: 25:35:40:1
    holds its image, 20:20:40:1 is shake-to-erase. More talc than oil means
    persistent; at or below the 20:20 reference (talc normalized against
    the iron=40 scale) means not; anything between is unknown (None).
    """
    if not total_weight > 0:
        raise SpecInvalid(f"total_weight must be positive, got {total_weight}")
    parts = [float(p) for p in ratio]
    if len(parts) != 4:
        raise SpecInvalid("ratio must have exactly 4 parts (oil, talc, iron, dye)")
    if any(p < 0 for p in parts):
        raise SpecInvalid("ratio parts must be >= 0")
    s = sum(parts)
    if s == 0:
        raise ZeroRatio("all mixture ratio parts are zero")
    oil, talc, iron, dye = (total_weight * p / s for p in parts)
    p_oil, p_talc, p_iron, _ = parts
    if p_oil == 0:
        persistent = True if p_talc > 0 else None
    elif p_talc / p_oil > 1.0:
        persistent = True
    else:
        talc_norm = p_talc * 40.0 / p_iron if p_iron > 0 else p_talc / p_oil * 20.0
        persistent = None if talc_norm > 20.0 else False
    return MixtureRecipe(oil, talc, iron, dye, persistent)
