"""Apertures, Fresnel free-space propagation, beam splitting and arm paths."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy.fft import fft, ifft, next_fast_len

from .errors import AliasingError, SamplingError, ValidationError
from .grid import Axis, ComplexField, require_same_axis

__all__ = [
    "ApertureSpec", "Free", "Mask", "PathSpec",
    "mask_profile", "apply_mask", "propagate_fresnel", "propagate_kernel_matrix",
    "split_beam", "run_path", "run_path_values", "propagate_values", "wavenumber",
]

APERTURE_KINDS = ("double_slit", "single_slit", "incomplete_double_slit", "custom")
DEFAULT_MAX_SAMPLES = 1 << 22
MIN_FEATURE_SAMPLES = 4


def wavenumber(wavelength: float) -> float:
    return 2.0 * math.pi / wavelength


@dataclass(frozen=True)
class ApertureSpec:
    """Real transmission mask.

    Slit kinds use width ``b`` and center separation ``d``: the double slit
    opens ``d/2 +- b/2`` on both sides, the single slit only the ``+d/2`` one.
    The incomplete kind keeps the ``+d/2`` slit and, of the ``-d/2`` slit, only
    a ``retained_fraction * b`` wide strip against its inner edge.
    """

    kind: str = "double_slit"
    b: float = 85e-6
    d: float = 330e-6
    retained_fraction: float = 1.0
    custom_axis: Optional[Axis] = None
    custom_values: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in APERTURE_KINDS:
            raise ValidationError(f"unknown aperture kind {self.kind!r}")
        if self.kind == "custom":
            if self.custom_axis is None or self.custom_values is None:
                raise ValidationError("custom aperture needs custom_axis and custom_values")
            vals = tuple(float(v) for v in self.custom_values)
            if len(vals) != self.custom_axis.n:
                raise ValidationError("custom profile length does not match its axis")
            if any(not (0.0 <= v <= 1.0) for v in vals):
                raise ValidationError("transmission values must lie in [0, 1]")
            object.__setattr__(self, "custom_values", vals)
            return
        if not (0 < self.b < self.d):
            raise ValidationError(f"slits must satisfy 0 < b < d (got b={self.b!r}, d={self.d!r})")
        if not (0 < self.retained_fraction <= 1):
            raise ValidationError("retained_fraction must lie in (0, 1]")

    @classmethod
    def double(cls, b=85e-6, d=330e-6):
        return cls("double_slit", b, d)

    @classmethod
    def single(cls, b=85e-6, d=330e-6):
        return cls("single_slit", b, d)

    @classmethod
    def incomplete(cls, b=85e-6, d=330e-6, retained_fraction=0.25):
        return cls("incomplete_double_slit", b, d, retained_fraction)

    def intervals(self) -> list:
        """Open intervals ``[(lo, hi), ...]`` in ascending order (slit kinds only)."""
        b, d = self.b, self.d
        right = (d / 2 - b / 2, d / 2 + b / 2)
        if self.kind == "double_slit":
            return [(-d / 2 - b / 2, -d / 2 + b / 2), right]
        if self.kind == "single_slit":
            return [right]
        if self.kind == "incomplete_double_slit":
            inner = -d / 2 + b / 2
            return [(inner - self.retained_fraction * b, inner), right]
        raise ValidationError("custom apertures have no interval description")


@dataclass(frozen=True)
class Free:
    """Free-space travel over ``z`` meters."""

    z: float

    def __post_init__(self):
        if not (self.z > 0 and math.isfinite(self.z)):
            raise ValidationError(f"free-space distance must be positive, got {self.z!r}")


@dataclass(frozen=True)
class Mask:
    aperture: ApertureSpec


Element = Union[Free, Mask]


@dataclass(frozen=True)
class PathSpec:
    """Ordered optical elements of one arm, from the source plane to a detector."""

    elements: tuple = ()
    arm: str = "test"

    def __post_init__(self):
        els = tuple(self.elements)
        for el in els:
            if not isinstance(el, (Free, Mask)):
                raise ValidationError(f"unsupported path element {el!r}")
        object.__setattr__(self, "elements", els)

    @property
    def length(self) -> float:
        return sum(el.z for el in self.elements if isinstance(el, Free))


_SNAP = 1e-9


def _pixel_overlap(coords: np.ndarray, dx: float, lo: float, hi: float) -> np.ndarray:
    left = np.maximum(coords - dx / 2, lo)
    right = np.minimum(coords + dx / 2, hi)
    frac = np.clip((right - left) / dx, 0.0, 1.0)
    # edges that fall on pixel boundaries leave ~1e-15 residue from the coordinate arithmetic
    frac[frac > 1.0 - _SNAP] = 1.0
    frac[frac < _SNAP] = 0.0
    return frac


def mask_profile(spec: ApertureSpec, a: Axis) -> ComplexField:
    """Transmission sampled on ``a``; edge pixels carry their open-area fraction."""
    if spec.kind == "custom":
        if spec.custom_axis.matches(a):
            t = np.asarray(spec.custom_values)
        else:
            src = spec.custom_axis
            t = np.interp(a.coords, src.coords, np.asarray(spec.custom_values), left=0.0, right=0.0)
        return ComplexField(a, t.astype(np.complex128))
    ivs = spec.intervals()
    smallest = min(hi - lo for lo, hi in ivs)
    if smallest < MIN_FEATURE_SAMPLES * a.dx:
        raise SamplingError(
            f"smallest open feature ({smallest:.3e} m) spans fewer than "
            f"{MIN_FEATURE_SAMPLES} samples of pitch {a.dx:.3e} m")
    edge_lo, edge_hi = a.lo - a.dx / 2, a.hi + a.dx / 2
    if ivs[0][0] < edge_lo or ivs[-1][1] > edge_hi:
        raise ValidationError("axis is narrower than the mask support")
    x = a.coords
    t = np.zeros(a.n)
    for lo, hi in ivs:
        t += _pixel_overlap(x, a.dx, lo, hi)
    return ComplexField(a, np.minimum(t, 1.0).astype(np.complex128))


def apply_mask(f: ComplexField, spec: Union[ApertureSpec, ComplexField]) -> ComplexField:
    prof = spec if isinstance(spec, ComplexField) else mask_profile(spec, f.axis)
    require_same_axis(f.axis, prof.axis)
    return ComplexField(f.axis, f.values * prof.values)


def _support(values: np.ndarray):
    nz = np.flatnonzero(np.any(values != 0, axis=tuple(range(values.ndim - 1))))
    if nz.size == 0:
        return None
    return int(nz[0]), int(nz[-1])


def padded_size(n: int, dx: float, z: float, wavelength: float, support=None,
                pad: bool = True, max_samples: int = DEFAULT_MAX_SAMPLES) -> int:
    """FFT length that keeps the band-limited Fresnel response from wrapping.

    Content at the Nyquist frequency walks ``lambda z / (2 dx)`` sideways, so
    the periodic window must exceed the support-to-window span by that reach;
    equivalently the transfer-function chirp stays Nyquist sampled in q.
    """
    s0, s1 = support if support is not None else (0, n - 1)
    reach = wavelength * z / (2.0 * dx * dx)
    guard = max(16, int(math.ceil(0.05 * reach)))
    need = max(s1, n - 1 - s0) + int(math.ceil(reach)) + guard + 1
    if not pad:
        if need > n:
            raise AliasingError(
                f"Fresnel chirp over z={z:.3e} m exceeds the Nyquist rate of an unpadded "
                f"{n}-sample window (needs {need}); enable padding or refine the grid")
        return n
    size = next_fast_len(max(n, need))
    if size > max_samples:
        raise AliasingError(
            f"propagation over z={z:.3e} m needs a {size}-sample window (> {max_samples}); "
            "grid pitch too fine or distance too long for alias-free spectral propagation")
    return size


def propagate_values(values: np.ndarray, dx: float, z: float, wavelength: float, *,
                     pad: bool = True, max_samples: int = DEFAULT_MAX_SAMPLES) -> np.ndarray:
    """Fresnel propagation of the last axis of ``values`` (transfer-function method).

    Equivalent to convolving with ``sqrt(k/(2 pi i z)) exp(ikz) exp(ik u^2 / 2z)``;
    the transfer function is ``exp(ikz) exp(-i z q^2 / 2k)``.
    """
    if not (z > 0 and math.isfinite(z)):
        raise ValidationError(f"propagation distance must be positive, got {z!r}")
    values = np.asarray(values, dtype=np.complex128)
    n = values.shape[-1]
    k = wavenumber(wavelength)
    phase0 = np.exp(1j * ((k * z) % (2.0 * math.pi)))
    sup = _support(values)
    if sup is None:
        return np.zeros_like(values)
    size = padded_size(n, dx, z, wavelength, sup, pad, max_samples)
    q = 2.0 * np.pi * np.fft.fftfreq(size, dx)
    h = phase0 * np.exp(-1j * (z / (2.0 * k)) * q * q)
    spec = fft(values, n=size, axis=-1)
    spec *= h
    return ifft(spec, axis=-1)[..., :n]


def propagate_fresnel(f: ComplexField, z: float, wavelength: float, *, pad: bool = True,
                      max_samples: int = DEFAULT_MAX_SAMPLES) -> ComplexField:
    out = propagate_values(f.values, f.axis.dx, z, wavelength, pad=pad, max_samples=max_samples)
    return ComplexField(f.axis, out)


def propagate_kernel_matrix(a_in: Axis, a_out: Axis, z: float, wavelength: float,
                            max_n: int = 512) -> np.ndarray:
    """Direct midpoint discretization of the Fresnel kernel (slow reference path).

    ``M[j, i] = kernel(x_out[j], x_in[i]) * dx_in``.
    """
    if max(a_in.n, a_out.n) > max_n:
        raise ValidationError(f"kernel matrix limited to {max_n} samples per axis")
    if not z > 0:
        raise ValidationError("propagation distance must be positive")
    k = wavenumber(wavelength)
    amp = math.sqrt(k / (2.0 * math.pi * z)) * np.exp(-1j * math.pi / 4)
    u = a_out.coords[:, None] - a_in.coords[None, :]
    return amp * np.exp(1j * ((k * z) % (2 * math.pi))) * np.exp(1j * k * u * u / (2.0 * z)) * a_in.dx


def split_beam(f: ComplexField):
    """Lossless, phase-free 50/50 split; both outputs carry the same realization."""
    half = f.values / math.sqrt(2.0)
    return ComplexField(f.axis, half), ComplexField(f.axis, half)


def run_path_values(values: np.ndarray, axis: Axis, path: PathSpec, wavelength: float,
                    profiles: Optional[dict] = None, **kw) -> np.ndarray:
    """Apply ``path`` to one field or a stack of fields (last axis on ``axis``)."""
    out = np.asarray(values, dtype=np.complex128)
    for el in path.elements:
        if isinstance(el, Free):
            out = propagate_values(out, axis.dx, el.z, wavelength, **kw)
        else:
            prof = None if profiles is None else profiles.get(el.aperture)
            if prof is None:
                prof = mask_profile(el.aperture, axis).values
                if profiles is not None:
                    profiles[el.aperture] = prof
            out = out * prof
    return out


def run_path(source: ComplexField, p: PathSpec, wavelength: float, **kw) -> ComplexField:
    return ComplexField(source.axis, run_path_values(source.values, source.axis, p, wavelength, **kw))
