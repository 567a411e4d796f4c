"""Pseudothermal speckle source.

Fields are circular complex Gaussian: white noise on the DFT frequency grid is
shaped by the square root of the power spectrum and transformed to x-space.
The Fourier convention throughout is

    <E*(x) E(x')> = G(x' - x),   G(t) = integral W(q) exp(i q t) dq,

and the "coherence function" ``W~(t) = G(t) / sqrt(2 pi)`` is the unitary
transform of W. Its 1/e half-width is the coherence length; for the Gaussian
spectrum ``W(q) = w0 exp(-q^2 / sigma_q^2)`` that is exactly ``2 / sigma_q``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.fft import ifft
from scipy.optimize import brentq

from .errors import AxisMismatchError, InsufficientDataError, SamplingError, ValidationError
from .grid import Axis, ComplexField

__all__ = [
    "SpectrumModel", "SeedSpec", "FirstOrderEstimate", "DegenerateSpectrumWarning",
    "sample_speckle", "sample_speckle_batch", "coherence_length", "estimate_first_order",
    "check_sampling",
]

_KINDS = ("gaussian", "flat-top")
# sin(u)/u = 1/e
_SINC_1_OVER_E = brentq(lambda u: math.sin(u) / u - math.exp(-1.0), 1e-6, math.pi)


class DegenerateSpectrumWarning(UserWarning):
    """Emitted when a zero spectrum forces an all-zero field."""


@dataclass(frozen=True)
class SpectrumModel:
    """Spatial power spectrum of the source plus an optional intensity envelope.

    ``width`` is ``sigma_q`` for the gaussian kind and the cutoff ``q_max`` for
    flat-top, both in rad/m. ``width = inf`` (gaussian only) is the broadband
    limit, usable by the analytic oracle but not by the sampler.
    ``envelope_width`` is the 1/e half-width of the source intensity,
    ``exp(-x^2 / w^2)``; ``inf`` means uniform illumination.
    """

    kind: str = "gaussian"
    w0: float = 1.0
    width: float = 4.0e5
    envelope_width: float = math.inf

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValidationError(f"unknown spectrum kind {self.kind!r}; expected one of {_KINDS}")
        if not (self.w0 >= 0 and math.isfinite(self.w0)):
            raise ValidationError(f"spectral amplitude w0 must be finite and >= 0, got {self.w0!r}")
        if not self.width > 0:
            raise ValidationError(f"spectral width must be positive, got {self.width!r}")
        if math.isinf(self.width) and self.kind != "gaussian":
            raise ValidationError("only the gaussian kind has a broadband (infinite width) limit")
        if not self.envelope_width > 0:
            raise ValidationError(f"envelope width must be positive, got {self.envelope_width!r}")

    @classmethod
    def from_coherence_length(cls, length: float, kind: str = "gaussian", w0: float = 1.0,
                              envelope_width: float = math.inf) -> "SpectrumModel":
        if not length > 0:
            raise ValidationError("coherence length must be positive")
        width = 2.0 / length if kind == "gaussian" else _SINC_1_OVER_E / length
        return cls(kind, w0, width, envelope_width)

    @classmethod
    def broadband(cls, w0: float = 1.0) -> "SpectrumModel":
        return cls("gaussian", w0, math.inf, math.inf)

    @property
    def is_broadband(self) -> bool:
        return math.isinf(self.width)

    @property
    def has_envelope(self) -> bool:
        return math.isfinite(self.envelope_width)

    def power_spectrum(self, q):
        q = np.asarray(q, dtype=float)
        if self.is_broadband:
            return np.full_like(q, self.w0)
        if self.kind == "gaussian":
            return self.w0 * np.exp(-(q / self.width) ** 2)
        return np.where(np.abs(q) <= self.width, self.w0, 0.0)

    def field_covariance(self, t):
        """``G(t) = integral W(q) exp(iqt) dq`` (real and even here)."""
        t = np.asarray(t, dtype=float)
        if self.is_broadband:
            raise ValidationError("the broadband field covariance is a delta function")
        if self.kind == "gaussian":
            s = self.width
            return self.w0 * s * math.sqrt(math.pi) * np.exp(-(s * t) ** 2 / 4.0)
        qm = self.width
        return 2.0 * self.w0 * qm * np.sinc(qm * t / math.pi)

    def coherence_function(self, t):
        return self.field_covariance(t) / math.sqrt(2.0 * math.pi)

    def envelope(self, x):
        """Amplitude envelope ``exp(-x^2 / (2 w^2))``."""
        x = np.asarray(x, dtype=float)
        if not self.has_envelope:
            return np.ones_like(x)
        return np.exp(-x * x / (2.0 * self.envelope_width ** 2))


def coherence_length(spec: SpectrumModel) -> float:
    """1/e half-width of ``|W~(t)|``.

    Gaussian: ``2 / sigma_q``. Flat-top: ``u / q_max`` with ``sin(u)/u = 1/e``
    (u ~ 2.21); the first zero of that sinc sits at ``pi / q_max``.
    """
    if spec.is_broadband:
        return 0.0
    if spec.kind == "gaussian":
        return 2.0 / spec.width
    return _SINC_1_OVER_E / spec.width


@dataclass(frozen=True)
class SeedSpec:
    """Counter-style seed: the stream is a pure function of (master_seed, realization_index)."""

    master_seed: int
    realization_index: int = 0

    def __post_init__(self):
        if self.realization_index < 0:
            raise ValidationError("realization index must be non-negative")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=int(self.master_seed) % (1 << 64),
                                    spawn_key=(int(self.realization_index),))
        return np.random.Generator(np.random.PCG64(ss))


def check_sampling(spec: SpectrumModel, axis: Axis) -> None:
    """Raise SamplingError unless ``axis`` resolves the coherence length of ``spec``."""
    if spec.is_broadband:
        raise SamplingError("a broadband (delta-correlated) source cannot be sampled on a grid")
    lc = coherence_length(spec)
    if axis.dx > lc:
        raise SamplingError(
            f"grid pitch {axis.dx:.3e} m under-resolves the coherence length {lc:.3e} m "
            "(need dx <= coherence length)")


def _shaping(spec: SpectrumModel, axis: Axis) -> np.ndarray:
    q = 2.0 * np.pi * np.fft.fftfreq(axis.n, axis.dx)
    dq = 2.0 * np.pi / (axis.n * axis.dx)
    return np.sqrt(spec.power_spectrum(q) * dq)


def _white(seed: SeedSpec, n: int) -> np.ndarray:
    z = seed.generator().standard_normal((2, n))
    return (z[0] + 1j * z[1]) * math.sqrt(0.5)


def sample_speckle_batch(spec: SpectrumModel, axis: Axis, master_seed: int,
                         indices: Iterable[int]) -> np.ndarray:
    """Realizations for several indices as a ``(len(indices), n)`` array.

    Row ``r`` depends only on ``(master_seed, indices[r])``.
    """
    check_sampling(spec, axis)
    indices = list(indices)
    n = axis.n
    if spec.w0 == 0:
        warnings.warn("zero power spectrum: returning all-zero fields", DegenerateSpectrumWarning,
                      stacklevel=2)
        return np.zeros((len(indices), n), dtype=np.complex128)
    noise = np.empty((len(indices), n), dtype=np.complex128)
    for r, idx in enumerate(indices):
        noise[r] = _white(SeedSpec(master_seed, idx), n)
    fields = ifft(noise * _shaping(spec, axis), axis=-1) * n
    if spec.has_envelope:
        fields *= spec.envelope(axis.coords)
    return fields


def sample_speckle(spec: SpectrumModel, axis: Axis, seed: SeedSpec) -> ComplexField:
    """One frozen speckle realization, deterministic in ``seed``."""
    vals = sample_speckle_batch(spec, axis, seed.master_seed, [seed.realization_index])[0]
    return ComplexField(axis, vals)


@dataclass(frozen=True)
class FirstOrderEstimate:
    """Sample mean of ``E*(x) E(x')`` with per-entry standard errors."""

    axis: Axis
    mean: np.ndarray
    stderr: np.ndarray
    count: int


def estimate_first_order(ensemble: Sequence[ComplexField]) -> FirstOrderEstimate:
    if len(ensemble) < 2:
        raise InsufficientDataError("need at least two realizations")
    axis = ensemble[0].axis
    for f in ensemble[1:]:
        if not f.axis.matches(axis):
            raise AxisMismatchError("realizations do not share a common axis")
    e = np.stack([f.values for f in ensemble])
    prods = np.conj(e)[:, :, None] * e[:, None, :]
    mean = prods.mean(axis=0)
    # diagonal is the mean intensity: real by construction, not by rounding luck
    np.fill_diagonal(mean, (e.real ** 2 + e.imag ** 2).mean(axis=0))
    dev = prods - mean
    var = (dev.real ** 2 + dev.imag ** 2).sum(axis=0) / (len(ensemble) - 1)
    return FirstOrderEstimate(axis, mean, np.sqrt(var / len(ensemble)), len(ensemble))
