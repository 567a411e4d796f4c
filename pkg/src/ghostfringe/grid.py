"""Uniform, centered 1D sample grids and complex fields living on them."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AxisMismatchError, ValidationError

__all__ = ["Axis", "ComplexField", "make_axis", "fourier_dual_axis", "power", "require_same_axis"]


@dataclass(frozen=True)
class Axis:
    """Uniform sample grid.

    Sample ``i`` sits at ``center + (i - (n - 1) / 2) * dx``; for even ``n``
    the center falls between the two middle samples.
    """

    n: int
    dx: float
    center: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValidationError(f"axis needs n >= 2 samples, got {self.n!r}")
        if not (math.isfinite(self.dx) and self.dx > 0):
            raise ValidationError(f"axis pitch must be positive and finite, got {self.dx!r}")
        if not math.isfinite(self.center):
            raise ValidationError("axis center must be finite")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "dx", float(self.dx))
        object.__setattr__(self, "center", float(self.center))

    @property
    def coords(self) -> np.ndarray:
        return self.center + (np.arange(self.n) - (self.n - 1) / 2.0) * self.dx

    @property
    def extent(self) -> float:
        return self.n * self.dx

    @property
    def lo(self) -> float:
        return self.center - (self.n - 1) / 2.0 * self.dx

    @property
    def hi(self) -> float:
        return self.center + (self.n - 1) / 2.0 * self.dx

    def index_of(self, x: float) -> int:
        """Index of the sample nearest to ``x``; raises if ``x`` is off the axis."""
        half = 0.5 * self.dx
        if x < self.lo - half or x > self.hi + half:
            raise ValidationError(f"position {x!r} m lies outside the axis [{self.lo!r}, {self.hi!r}]")
        i = int(round((x - self.center) / self.dx + (self.n - 1) / 2.0))
        return min(max(i, 0), self.n - 1)

    def matches(self, other: "Axis", rtol: float = 1e-12) -> bool:
        if self.n != other.n:
            return False
        scale = max(abs(self.dx), abs(other.dx))
        return (abs(self.dx - other.dx) <= rtol * scale
                and abs(self.center - other.center) <= rtol * max(scale * self.n, abs(self.center)))


def make_axis(n: int, dx: float, center: float = 0.0) -> Axis:
    return Axis(n, dx, center)


def fourier_dual_axis(a: Axis) -> Axis:
    """Spatial-frequency axis paired with ``a`` by the DFT (pitch 2*pi/(n*dx), centered at 0)."""
    return Axis(a.n, 2.0 * math.pi / (a.n * a.dx), 0.0)


def require_same_axis(a: Axis, b: Axis, what: str = "fields") -> None:
    if not a.matches(b):
        raise AxisMismatchError(f"{what} live on different axes: {a} vs {b}")


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Complex amplitude samples on an :class:`Axis`.

    The stored array is a read-only copy, so instances can be shared freely.
    """

    axis: Axis
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.complex128, copy=True)
        if vals.ndim != 1 or vals.shape[0] != self.axis.n:
            raise ValidationError(f"field has shape {vals.shape}, axis expects ({self.axis.n},)")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def intensity(self) -> np.ndarray:
        v = self.values
        return v.real * v.real + v.imag * v.imag

    def scaled(self, c: complex) -> "ComplexField":
        return ComplexField(self.axis, self.values * c)

    @classmethod
    def zeros(cls, axis: Axis) -> "ComplexField":
        return cls(axis, np.zeros(axis.n, dtype=np.complex128))


def power(f: ComplexField) -> float:
    """Total power ``sum |E_i|^2 * dx``."""
    return float(np.sum(f.intensity) * f.axis.dx)
