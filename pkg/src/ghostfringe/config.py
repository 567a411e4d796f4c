"""INI-style scenario configuration with mandatory length units.

Sections and keys (lengths need a unit suffix: nm, um, µm, mm, cm or m)::

    [scheme]    scheme = A | B
    [grid]      n, dx
    [spectrum]  wavelength, kind (gaussian | flat-top), coherence_length,
                envelope_width (length or "none"), w0
    [ensemble]  size, seed, block_size, fixed_arm (1 | 2), fixed_position
    [geometry]  scheme A: slit_distance, ccd1_distance, ccd2_distance, ccd3_distance
                scheme B: test_slit_distance, test_detector_distance,
                          ref_slit_distance, ref_detector_distance
                (all measured from the source plane)
    [aperture]  slit_width, slit_separation, test, reference
                (double | single | incomplete), retained_fraction;
                test_aperture and ref_aperture are accepted as aliases

Unknown sections or keys are rejected with the offending line number.
"""
from __future__ import annotations

import configparser
import hashlib
import math
import re
from dataclasses import fields

from .errors import ConfigError, ValidationError
from .scenario import GEOMETRY_DEFAULTS, ScenarioConfig

__all__ = ["parse_config", "emit_config", "config_hash", "parse_length", "load_config"]

_UNITS = {"nm": 1e-9, "um": 1e-6, "µm": 1e-6, "μm": 1e-6, "mm": 1e-3, "cm": 1e-2, "m": 1.0}
_LENGTH = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(nm|um|µm|μm|mm|cm|m)\s*$")

# (section, key) -> (config field, kind)
_SCHEMA = {
    ("scheme", "scheme"): ("scheme", "scheme"),
    ("grid", "n"): ("n", "int"),
    ("grid", "dx"): ("dx", "length"),
    ("spectrum", "wavelength"): ("wavelength", "length"),
    ("spectrum", "kind"): ("spectrum_kind", "word"),
    ("spectrum", "coherence_length"): ("coherence_length", "length"),
    ("spectrum", "envelope_width"): ("envelope_width", "length_or_none"),
    ("spectrum", "w0"): ("w0", "float"),
    ("ensemble", "size"): ("ensemble_size", "int"),
    ("ensemble", "seed"): ("master_seed", "int"),
    ("ensemble", "block_size"): ("block_size", "int"),
    ("ensemble", "fixed_arm"): ("fixed_arm", "int"),
    ("ensemble", "fixed_position"): ("fixed_position", "length"),
    ("aperture", "slit_width"): ("slit_width", "length"),
    ("aperture", "slit_separation"): ("slit_separation", "length"),
    ("aperture", "test"): ("test_aperture", "word"),
    ("aperture", "reference"): ("ref_aperture", "word"),
    ("aperture", "test_aperture"): ("test_aperture", "word"),
    ("aperture", "ref_aperture"): ("ref_aperture", "word"),
    ("aperture", "retained_fraction"): ("retained_fraction", "float"),
}
_GEOMETRY_KEYS = {k for g in GEOMETRY_DEFAULTS.values() for k in g}
_SECTIONS = ("scheme", "grid", "spectrum", "ensemble", "geometry", "aperture")


def parse_length(text: str) -> float:
    """``"85 µm"`` -> ``8.5e-05``; a bare number is an error."""
    m = _LENGTH.match(text)
    if not m:
        raise ValueError(f"length {text.strip()!r} needs a unit (nm, um, µm, mm, cm, m)")
    return float(m.group(1)) * _UNITS[m.group(2)]


def _line_index(text: str) -> dict:
    """Line number of every ``(section, key)`` and section header."""
    where, section = {}, None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            where.setdefault((section, None), no)
            continue
        for sep in ("=", ":"):
            if sep in line:
                key = line.split(sep, 1)[0].strip().lower()
                where.setdefault((section, key), no)
                break
    return where


def _convert(kind: str, raw: str):
    raw = raw.strip()
    if kind == "length":
        return parse_length(raw)
    if kind == "length_or_none":
        return math.inf if raw.lower() in ("none", "inf") else parse_length(raw)
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    if kind == "scheme":
        return raw.upper()
    return raw.lower()


def parse_config(text: str) -> ScenarioConfig:
    """Validated configuration with defaults filled in."""
    lines = _line_index(text)
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str.lower
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("expected a [section] header before the first key", exc.lineno) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError(str(exc).split(": ", 1)[-1], getattr(exc, "lineno", None)) from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ConfigError("malformed line", lineno) from None
    values, geometry = {}, {}
    for section in cp.sections():
        sec = section.lower()
        if sec not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]", lines.get((sec, None)))
        for key, raw in cp.items(section):
            lineno = lines.get((sec, key))
            try:
                if sec == "geometry":
                    if key not in _GEOMETRY_KEYS:
                        raise ConfigError(f"unknown key {key!r} in [geometry]", lineno)
                    geometry[key] = parse_length(raw)
                    continue
                spec = _SCHEMA.get((sec, key))
                if spec is None:
                    raise ConfigError(f"unknown key {key!r} in [{section}]", lineno)
                if spec[0] in values:
                    raise ConfigError(f"{key!r} sets {spec[0]} twice", lineno)
                values[spec[0]] = _convert(spec[1], raw)
            except ConfigError:
                raise
            except ValueError as exc:
                raise ConfigError(f"{key}: {exc}", lineno) from None
    if "scheme" not in values:
        raise ConfigError("missing [scheme] scheme = A | B", lines.get(("scheme", None)))
    try:
        return ScenarioConfig(geometry=tuple(geometry.items()), **values)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _fmt_length(v: float) -> str:
    return "none" if math.isinf(v) else f"{v!r} m"


def emit_config(cfg: ScenarioConfig) -> str:
    """Canonical text form; lengths are written in meters at full precision."""
    out = ["[scheme]", f"scheme = {cfg.scheme}", "", "[grid]", f"n = {cfg.n}",
           f"dx = {_fmt_length(cfg.dx)}", "", "[spectrum]",
           f"wavelength = {_fmt_length(cfg.wavelength)}", f"kind = {cfg.spectrum_kind}",
           f"coherence_length = {_fmt_length(cfg.coherence_length)}",
           f"envelope_width = {_fmt_length(cfg.envelope_width)}", f"w0 = {cfg.w0!r}", "",
           "[ensemble]", f"size = {cfg.ensemble_size}", f"seed = {cfg.master_seed}",
           f"block_size = {cfg.block_size}", f"fixed_arm = {cfg.fixed_arm}",
           f"fixed_position = {_fmt_length(cfg.fixed_position)}", "", "[geometry]"]
    out += [f"{k} = {_fmt_length(v)}" for k, v in cfg.geometry]
    out += ["", "[aperture]", f"slit_width = {_fmt_length(cfg.slit_width)}",
            f"slit_separation = {_fmt_length(cfg.slit_separation)}",
            f"test = {cfg.test_aperture}", f"reference = {cfg.ref_aperture}",
            f"retained_fraction = {cfg.retained_fraction!r}", ""]
    return "\n".join(out)


def config_hash(cfg: ScenarioConfig) -> str:
    """sha256 of the canonical text, first 16 hex digits."""
    return hashlib.sha256(emit_config(cfg).encode("utf-8")).hexdigest()[:16]
