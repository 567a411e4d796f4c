"""The two correlation schemes: configuration, plans and ensemble runs."""
from __future__ import annotations

import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .correlation import CorrelationAccumulator, CorrelationResult, scan_slice
from .errors import ValidationError
from .grid import Axis
from .optics import ApertureSpec, Free, Mask, PathSpec, mask_profile, run_path_values
from .speckle import SpectrumModel, check_sampling, sample_speckle_batch

__all__ = [
    "ScenarioConfig", "SimulationPlan", "Pairing", "build_plan", "build_scheme_A",
    "build_scheme_B", "run_plan", "scan_slice", "GEOMETRY_DEFAULTS", "DEFAULT_ENSEMBLE",
    "CHUNK_BLOCKS",
]

# distances measured from the source plane, meters
GEOMETRY_DEFAULTS = {
    "A": {"slit_distance": 0.10, "ccd1_distance": 0.30, "ccd2_distance": 0.10,
          "ccd3_distance": 0.44},
    "B": {"test_slit_distance": 0.02, "test_detector_distance": 0.42,
          "ref_slit_distance": 0.02, "ref_detector_distance": 0.42},
}
DEFAULT_ENSEMBLE = {"A": 10_000, "B": 5_000}
APERTURE_NAMES = {"double": "double_slit", "single": "single_slit",
                  "incomplete": "incomplete_double_slit"}
# realizations handed to one worker task: fixed so results never depend on the pool size
CHUNK_BLOCKS = 10


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to reproduce one ensemble run. Lengths in meters."""

    scheme: str = "B"
    n: int = 2048
    dx: float = 4e-6
    wavelength: float = 632.8e-9
    spectrum_kind: str = "gaussian"
    coherence_length: float = 5e-6
    envelope_width: float = 2e-3
    w0: float = 1.0
    ensemble_size: Optional[int] = None
    master_seed: int = 1
    block_size: int = 100
    fixed_arm: int = 1
    fixed_position: float = 0.0
    slit_width: float = 85e-6
    slit_separation: float = 330e-6
    test_aperture: str = "double"
    ref_aperture: str = "double"
    retained_fraction: float = 0.25
    geometry: tuple = ()

    def __post_init__(self):
        if self.scheme not in ("A", "B"):
            raise ValidationError(f"scheme must be A or B, got {self.scheme!r}")
        geo = dict(GEOMETRY_DEFAULTS[self.scheme])
        for k, v in dict(self.geometry).items():
            if k not in geo:
                raise ValidationError(f"geometry key {k!r} does not apply to scheme {self.scheme}")
            geo[k] = float(v)
        for k, v in geo.items():
            if not (v > 0 and math.isfinite(v)):
                raise ValidationError(f"distance {k} must be positive, got {v!r}")
        object.__setattr__(self, "geometry", tuple(sorted(geo.items())))
        if self.ensemble_size is None:
            object.__setattr__(self, "ensemble_size", DEFAULT_ENSEMBLE[self.scheme])
        if int(self.ensemble_size) < 2:
            raise ValidationError("ensemble size must be at least 2")
        if int(self.n) < 2 or not self.dx > 0 or not self.wavelength > 0:
            raise ValidationError("grid needs n >= 2, dx > 0 and a positive wavelength")
        if self.block_size < 1:
            raise ValidationError("block size must be positive")
        if self.fixed_arm not in (1, 2):
            raise ValidationError("fixed arm must be 1 or 2")
        for name in (self.test_aperture, self.ref_aperture):
            if name not in APERTURE_NAMES:
                raise ValidationError(f"unknown aperture {name!r}; use double, single or incomplete")
        if not 0 < self.retained_fraction <= 1:
            raise ValidationError(f"retained fraction must lie in (0, 1], got {self.retained_fraction!r}")
        if self.test_aperture != "double" and self.scheme == "A":
            raise ValidationError("scheme A uses a double slit object")
        self.aperture(self.test_aperture)
        self.aperture(self.ref_aperture)
        check_sampling(self.spectrum(), self.axis)
        g = self.geo
        if self.scheme == "A":
            if not g["ccd1_distance"] > g["slit_distance"]:
                raise ValidationError("CCD1 must lie beyond the object")
        else:
            for arm in ("test", "ref"):
                if not g[f"{arm}_detector_distance"] > g[f"{arm}_slit_distance"]:
                    raise ValidationError(f"{arm} detector must lie beyond its slit")

    @property
    def geo(self) -> dict:
        return dict(self.geometry)

    @property
    def axis(self) -> Axis:
        return Axis(self.n, self.dx)

    def aperture(self, name: str) -> ApertureSpec:
        frac = self.retained_fraction if name == "incomplete" else 1.0
        return ApertureSpec(APERTURE_NAMES[name], self.slit_width, self.slit_separation, frac)

    def spectrum(self) -> SpectrumModel:
        return SpectrumModel.from_coherence_length(
            self.coherence_length, self.spectrum_kind, self.w0, self.envelope_width)

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return replace(self, master_seed=int(seed))


@dataclass(frozen=True)
class Pairing:
    arm1: int
    arm2: int
    label: str
    mode: str = "auto"
    track_rows: tuple = ()
    track_cols: tuple = ()


@dataclass(frozen=True)
class SimulationPlan:
    source_axis: Axis
    arms: tuple
    detector_axes: tuple
    pairings: tuple
    wavelength: float
    spectrum: SpectrumModel

    def __post_init__(self):
        if len(self.arms) != len(self.detector_axes):
            raise ValidationError("one detector axis per arm is required")
        for p in self.pairings:
            for a in (p.arm1, p.arm2):
                if not 0 <= a < len(self.arms):
                    raise ValidationError(f"pairing {p.label!r} references a missing arm")
        for ax in self.detector_axes:
            if not ax.matches(self.source_axis):
                raise ValidationError("detector axes must match the propagation grid")
        for arm in self.arms:
            for el in arm.elements:
                if isinstance(el, Mask):
                    mask_profile(el.aperture, self.source_axis)


def build_scheme_A(cfg: ScenarioConfig) -> SimulationPlan:
    """Object arm to CCD1 plus two bare reference arms (CCD2, CCD3); CCD1 held fixed."""
    if cfg.scheme != "A":
        raise ValidationError("configuration is not scheme A")
    g, ax = cfg.geo, cfg.axis
    obj = cfg.aperture("double")
    arms = (
        PathSpec((Free(g["slit_distance"]), Mask(obj),
                  Free(g["ccd1_distance"] - g["slit_distance"])), "CCD1"),
        PathSpec((Free(g["ccd2_distance"]),), "CCD2"),
        PathSpec((Free(g["ccd3_distance"]),), "CCD3"),
    )
    row = (ax.index_of(cfg.fixed_position),)
    pairings = (Pairing(0, 1, "image", "slices", row), Pairing(0, 2, "interference", "slices", row))
    return SimulationPlan(ax, arms, (ax, ax, ax), pairings, cfg.wavelength, cfg.spectrum())


def build_scheme_B(cfg: ScenarioConfig) -> SimulationPlan:
    """Test and reference arms, each a slit followed by a detector."""
    if cfg.scheme != "B":
        raise ValidationError("configuration is not scheme B")
    g, ax = cfg.geo, cfg.axis
    arms = (
        PathSpec((Free(g["test_slit_distance"]), Mask(cfg.aperture(cfg.test_aperture)),
                  Free(g["test_detector_distance"] - g["test_slit_distance"])), "CCD1"),
        PathSpec((Free(g["ref_slit_distance"]), Mask(cfg.aperture(cfg.ref_aperture)),
                  Free(g["ref_detector_distance"] - g["ref_slit_distance"])), "CCD2"),
    )
    i = ax.index_of(cfg.fixed_position)
    pairings = (Pairing(0, 1, "correlation", "auto", (i,), (i,)),)
    return SimulationPlan(ax, arms, (ax, ax), pairings, cfg.wavelength, cfg.spectrum())


def build_plan(cfg: ScenarioConfig) -> SimulationPlan:
    return build_scheme_A(cfg) if cfg.scheme == "A" else build_scheme_B(cfg)


def config_digest(cfg: ScenarioConfig) -> str:
    from .config import config_hash
    return config_hash(cfg)


def _new_accumulators(plan: SimulationPlan, cfg: ScenarioConfig) -> dict:
    out = {}
    for p in plan.pairings:
        out[p.label] = CorrelationAccumulator(
            plan.detector_axes[p.arm1], plan.detector_axes[p.arm2],
            track_rows=p.track_rows, track_cols=p.track_cols,
            block_size=cfg.block_size, mode=p.mode)
    return out


def _run_chunk(args):
    plan, cfg, start, stop = args
    accs = _new_accumulators(plan, cfg)
    profiles = {}
    used = sorted({a for p in plan.pairings for a in (p.arm1, p.arm2)})
    for s in range(start, stop, cfg.block_size):
        idx = range(s, min(s + cfg.block_size, stop))
        src = sample_speckle_batch(plan.spectrum, plan.source_axis, cfg.master_seed, idx)
        src = src / math.sqrt(2.0)  # lossless 50/50 split, same realization in each arm
        fields = {a: run_path_values(src, plan.source_axis, plan.arms[a], plan.wavelength,
                                     profiles=profiles) for a in used}
        for p in plan.pairings:
            accs[p.label].accumulate_batch(fields[p.arm1], fields[p.arm2])
    return accs


def _chunks(cfg: ScenarioConfig):
    size = CHUNK_BLOCKS * cfg.block_size
    return [(s, min(s + size, cfg.ensemble_size)) for s in range(0, cfg.ensemble_size, size)]


def run_plan(plan: SimulationPlan, cfg: ScenarioConfig, workers: int = 1) -> dict:
    """Run the ensemble; returns ``{pairing label: CorrelationResult}``.

    Realizations are cut into fixed chunks that are reduced in index order, so
    the output is bit-identical for any ``workers``.
    """
    if workers < 1:
        raise ValidationError("workers must be >= 1")
    tasks = [(plan, cfg, a, b) for a, b in _chunks(cfg)]
    total = None
    if workers == 1 or len(tasks) == 1:
        results = map(_run_chunk, tasks)
        for accs in results:
            total = _reduce(total, accs)
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            for accs in pool.map(_run_chunk, tasks):
                total = _reduce(total, accs)
    meta = {"config_hash": config_digest(cfg), "seed": cfg.master_seed}
    return {k: acc.finalize(metadata=dict(meta, pairing=k)) for k, acc in total.items()}


def _reduce(total, accs):
    if total is None:
        return accs
    for k in total:
        total[k].merge_into(accs[k])
    return total
