"""Key-value config files for cell specs and printer profiles.

Format: one ``key = value`` pair per line, ``#`` comments, blank lines
ignored. Tuples are comma-separated. Macro strings may contain ``\\n``
escapes for multi-line macros.
"""

from __future__ import annotations

from dataclasses import fields
from pathlib import Path

from .constraints import CellSpec, PrinterProfile
from .errors import ConfigError


def parse_kv(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def _coerce(name: str, raw: str, kind):
    try:
        if kind is float:
            return float(raw)
        if kind is bool:
            low = raw.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        if kind is tuple:
            return tuple(float(p) for p in raw.split(","))
        if kind is str:
            return raw.replace("\\n", "\n")
    except ValueError:
        raise ConfigError(f"bad value for {name!r}: {raw!r}") from None
    raise ConfigError(f"unsupported config field type for {name!r}")


def _build(cls, data: dict[str, str], label: str):
    kinds = {}
    for f in fields(cls):
        if f.type in ("float", float):
            kinds[f.name] = float
        elif f.type in ("bool", bool):
            kinds[f.name] = bool
        elif f.type in ("tuple", tuple):
            kinds[f.name] = tuple
        else:
            kinds[f.name] = str
    unknown = sorted(set(data) - set(kinds))
    if unknown:
        raise ConfigError(f"unknown {label} keys: {', '.join(unknown)}")
    kwargs = {k: _coerce(k, v, kinds[k]) for k, v in data.items()}
    return cls(**kwargs)


def load_spec(path: str | Path) -> CellSpec:
    return spec_from_text(Path(path).read_text())


def spec_from_text(text: str) -> CellSpec:
    return _build(CellSpec, parse_kv(text), "spec")


def load_profile(path: str | Path) -> PrinterProfile:
    return profile_from_text(Path(path).read_text())


def profile_from_text(text: str) -> PrinterProfile:
    return _build(PrinterProfile, parse_kv(text), "profile")


def dump_spec(spec: CellSpec) -> str:
    lines = ["# display cell spec (lengths in mm)"]
    for f in fields(CellSpec):
        lines.append(f"{f.name} = {getattr(spec, f.name)}")
    return "\n".join(lines) + "\n"


def dump_profile(profile: PrinterProfile) -> str:
    lines = ["# printer profile (lengths in mm, volumes in mm^3)"]
    for f in fields(PrinterProfile):
        value = getattr(profile, f.name)
        if isinstance(value, tuple):
            value = ", ".join(f"{v:g}" for v in value)
        elif isinstance(value, str):
            value = value.replace("\n", "\\n")
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"
