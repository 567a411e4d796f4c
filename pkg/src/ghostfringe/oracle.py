"""Reference values for two-arm correlations.

Two independent routes are provided. Closed forms hold for the symmetric
broadband geometry (equal source-to-mask and mask-to-detector distances in
both arms): with ``q = k (x1 - x2) / z`` and ``M = T1 * T2``,

    g2 = 1 + |M~(q)|^2 / (T1~(0) T2~(0)).

The quadrature route integrates the propagated field correlation directly.
For a finite spectrum it expands the source into tilted envelope modes
``A(s) exp(iqs)``, propagates each mode (analytically through free space,
by panel quadrature across a mask) and integrates over ``q`` against the
power spectrum. In the broadband limit the source correlation collapses to a
delta function and a single integral over the mask plane remains.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import QuadratureError, UnsupportedCaseError, ValidationError
from .fringe import FringeMetrics, extract_fringe_metrics
from .optics import ApertureSpec, Free, Mask, PathSpec, wavenumber
from .quadrature import bisect_edges, gauss_legendre, integrate, oscillation_edges, panel_rule
from .speckle import SpectrumModel

__all__ = [
    "ClosedFormCase", "sinc", "aperture_spectrum", "interval_spectrum",
    "numeric_aperture_spectrum", "aperture_segments", "closed_form_g2",
    "gaussian_beam", "fresnel_kernel", "CrossCorrelation", "cross_correlation_surface",
    "quadrature_cross_correlation", "mean_intensity", "quadrature_g2", "predicted_visibility",
    "fringe_period",
]

SQRT2PI = math.sqrt(2.0 * math.pi)
SLIT_KINDS = ("double_slit", "single_slit", "incomplete_double_slit")


def sinc(u):
    """Unnormalized ``sin(u)/u`` with the removable singularity filled in."""
    return np.sinc(np.asarray(u) / np.pi)


def interval_spectrum(segments, q):
    """Transform of a piecewise-constant mask given as ``(lo, hi, value)`` segments."""
    q = np.asarray(q, dtype=float)
    out = np.zeros(q.shape, dtype=np.complex128)
    for lo, hi, v in segments:
        w, c = hi - lo, 0.5 * (lo + hi)
        out += v * w / SQRT2PI * sinc(q * w / 2) * np.exp(-1j * q * c)
    return out


def aperture_segments(spec: ApertureSpec) -> list:
    """Open regions as ``(lo, hi, transmission)``; custom profiles become pixel runs."""
    if spec.kind != "custom":
        return [(lo, hi, 1.0) for lo, hi in spec.intervals()]
    a = spec.custom_axis
    vals = np.asarray(spec.custom_values)
    x = a.coords
    segs = []
    i = 0
    while i < a.n:
        j = i
        while j + 1 < a.n and vals[j + 1] == vals[i]:
            j += 1
        if vals[i] != 0:
            segs.append((x[i] - a.dx / 2, x[j] + a.dx / 2, float(vals[i])))
        i = j + 1
    return segs


def _overlap(s1, s2):
    out = []
    for lo1, hi1, v1 in s1:
        for lo2, hi2, v2 in s2:
            lo, hi = max(lo1, lo2), min(hi1, hi2)
            if hi > lo:
                out.append((lo, hi, v1 * v2))
    return sorted(out)


def aperture_spectrum(spec: ApertureSpec, q):
    """Closed-form ``T~(q) = (2 pi)^(-1/2) int T(x) exp(-iqx) dx``."""
    q = np.asarray(q, dtype=float)
    if spec.kind == "custom":
        return interval_spectrum(aperture_segments(spec), q)
    b, d = spec.b, spec.d
    single = b / SQRT2PI * sinc(q * b / 2) * np.exp(-1j * q * d / 2)
    if spec.kind == "double_slit":
        return (2 * b / SQRT2PI * sinc(q * b / 2) * np.cos(q * d / 2)).astype(np.complex128)
    if spec.kind == "single_slit":
        return single
    fb = spec.retained_fraction * b
    c = -d / 2 + b / 2 - fb / 2
    return single + fb / SQRT2PI * sinc(q * fb / 2) * np.exp(-1j * q * c)


def numeric_aperture_spectrum(spec: ApertureSpec, q, rtol: float = 1e-12):
    """Aperture transform by adaptive quadrature over the open regions."""
    q = np.atleast_1d(np.asarray(q, dtype=float))
    qmax = float(np.max(np.abs(q))) if q.size else 0.0
    total = np.zeros(q.shape, dtype=np.complex128)
    for lo, hi, v in aperture_segments(spec):
        val, _ = integrate(lambda x: np.exp(-1j * q[:, None] * x[None, :]), lo, hi,
                           rate=lambda x: qmax + 1.0, rtol=rtol)
        total += v * val
    return total / SQRT2PI


@dataclass(frozen=True)
class ClosedFormCase:
    """Symmetric broadband two-arm geometry with mask-to-detector distance ``z``."""

    test_aperture: ApertureSpec
    ref_aperture: ApertureSpec
    z: float = 0.40
    wavelength: float = 632.8e-9
    w0: float = 1.0

    def __post_init__(self):
        for ap in (self.test_aperture, self.ref_aperture):
            if ap.kind not in SLIT_KINDS:
                raise UnsupportedCaseError(f"no closed form for aperture kind {ap.kind!r}")
        if not (self.z > 0 and self.wavelength > 0):
            raise ValidationError("z and wavelength must be positive")

    @property
    def k(self) -> float:
        return wavenumber(self.wavelength)

    def overlap_spectrum(self, q):
        t, r = self.test_aperture, self.ref_aperture
        if t.kind == "double_slit" and (t.b, t.d) == (r.b, r.d):
            return aperture_spectrum(r, q)  # nested masks: D * R = R
        if t == r:
            return aperture_spectrum(t, q)
        return interval_spectrum(_overlap(aperture_segments(t), aperture_segments(r)), q)


def fringe_period(case: ClosedFormCase) -> float:
    """Separation period ``lambda z / d`` of the double-slit cos factor."""
    return case.wavelength * case.z / case.test_aperture.d


def closed_form_g2(case: ClosedFormCase, x1, x2, normalized: bool = True):
    """Correlation at detector positions ``x1`` (test) and ``x2`` (reference).

    With ``normalized=False`` returns ``k^2 w0^2 / (2 pi z^2)`` times the sum of the
    background and interference terms.
    """
    q = case.k * (np.asarray(x1, dtype=float) - np.asarray(x2, dtype=float)) / case.z
    background = float(aperture_spectrum(case.test_aperture, 0.0).real
                       * aperture_spectrum(case.ref_aperture, 0.0).real)
    interference = np.abs(case.overlap_spectrum(q)) ** 2
    if normalized:
        return 1.0 + interference / background
    pref = case.k ** 2 * case.w0 ** 2 / (2 * math.pi * case.z ** 2)
    return pref * (background + interference)


def predicted_visibility(case: ClosedFormCase, samples_per_period: int = 128,
                         span_periods: int = 4) -> FringeMetrics:
    lam = fringe_period(case)
    m = samples_per_period * span_periods
    delta = np.arange(-m, m + 1) * (lam / samples_per_period)
    curve = closed_form_g2(case, delta, 0.0)
    return extract_fringe_metrics(delta, curve, lam)


# ---------------------------------------------------------------- propagation

def fresnel_kernel(u, z: float, wavelength: float):
    """Fresnel impulse response; a negative ``z`` gives the adjoint (back-propagation)."""
    if z < 0:
        return np.conj(fresnel_kernel(u, -z, wavelength))
    k = wavenumber(wavelength)
    amp = math.sqrt(k / (2 * math.pi * z)) * np.exp(1j * ((k * z) % (2 * math.pi) - math.pi / 4))
    u = np.asarray(u, dtype=float)
    return amp * np.exp(1j * k * u * u / (2 * z))


def gaussian_beam(x, q, z: float, wavelength: float, envelope_width: float = math.inf):
    """Free propagation over ``z`` of the mode ``exp(-s^2/(2 w^2)) exp(iqs)``.

    ``x`` and ``q`` broadcast against each other.
    """
    k = wavenumber(wavelength)
    x = np.asarray(x, dtype=float)
    q = np.asarray(q, dtype=float)
    phase0 = (k * z) % (2 * math.pi)
    arg = 1j * (q * x - (z / (2 * k)) * q * q + phase0)
    if math.isinf(envelope_width):
        return np.exp(arg)
    w2 = envelope_width ** 2
    g = 1.0 + 1j * z / (k * w2)
    s = x - z * q / k
    return np.exp(arg - s * s / (2 * w2 * g)) / np.sqrt(g)


@dataclass(frozen=True)
class _Arm:
    before: float            # free distance ahead of the mask (or the whole path)
    segments: Optional[list]  # None for a free path
    after: float = 0.0

    @property
    def masked(self):
        return self.segments is not None


def _arm(path: PathSpec) -> _Arm:
    before, after, segs = 0.0, 0.0, None
    for el in path.elements:
        if isinstance(el, Free):
            if segs is None:
                before += el.z
            else:
                after += el.z
        elif isinstance(el, Mask):
            if segs is not None:
                raise UnsupportedCaseError("quadrature route supports at most one mask per path")
            segs = aperture_segments(el.aperture)
    if segs is None and before <= 0:
        raise UnsupportedCaseError("empty path")
    if segs is not None and after <= 0:
        raise UnsupportedCaseError("a mask must be followed by free propagation to the detector")
    return _Arm(before, segs, after)


def _transmission_at(segs, x):
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape)
    for lo, hi, v in segs:
        out = np.where((x >= lo) & (x <= hi), v, out)
    return out


# ----------------------------------------------------------- finite spectrum

_Y_ORDER = 4
_Q_ORDER = 4
_BATCH_ELEMENTS = 1 << 22


def _geometric_exp(beta: complex, q: np.ndarray, start: float, step: float, count: int):
    """``exp(beta * q * (start + j * step))`` for ``j < count`` as a ``(count, nq)`` array.

    Built as a running product of one ratio per row instead of ``count * nq``
    exponentials.
    """
    out = np.empty((count, q.size), dtype=np.complex128)
    out[0] = np.exp(beta * q * start)
    if count > 1:
        out[1:] = np.exp(beta * q * step)
        np.cumprod(out, axis=0, out=out)
    return out


def _mode_factors(z: float, k: float, w: float):
    """Split a free-space mode into ``Y(s) * Qf(q) * exp(beta q s)``.

    Returns ``(beta, y_factor(s), q_factor(q))``.
    """
    phase0 = (k * z) % (2 * math.pi)
    if math.isinf(w):
        return (1j, lambda s: np.full(np.shape(s), np.exp(1j * phase0)),
                lambda q: np.exp(-1j * (z / (2 * k)) * q * q))
    w2 = w * w
    g = 1.0 + 1j * z / (k * w2)
    beta = 1j + z / (k * w2 * g)
    amp = np.exp(1j * phase0) / np.sqrt(g)
    return (beta, lambda s: amp * np.exp(-np.asarray(s) ** 2 / (2 * w2 * g)),
            lambda q: np.exp(-1j * (z / (2 * k)) * q * q - (z * q / k) ** 2 / (2 * w2 * g)))


def _uniform(x: np.ndarray):
    if x.size < 3:
        return None
    d = np.diff(x)
    if d[0] > 0 and np.max(np.abs(d - d[0])) <= 1e-9 * d[0]:
        return float(x[0]), float(d[0])
    return None


class _Modes:
    """Detector-plane response of one arm to the tilted source modes."""

    def __init__(self, arm: _Arm, spec: SpectrumModel, wavelength: float, x: np.ndarray):
        self.arm, self.spec, self.wl = arm, spec, wavelength
        self.k = wavenumber(wavelength)
        self.x = np.asarray(x, dtype=float)
        self.w = spec.envelope_width
        self.beta, self.yfac, self.qfac = _mode_factors(arm.before, self.k, self.w)
        self.grid = _uniform(self.x)

    @property
    def chirp(self) -> float:
        return self.arm.before

    @property
    def extent(self) -> float:
        if self.arm.masked:
            return max(max(abs(lo), abs(hi)) for lo, hi, _ in self.arm.segments)
        return float(np.max(np.abs(self.x)))

    def _panels(self, qmax: float):
        """Per segment: ``(lo, panel width, panel count, transmission)``."""
        a, c = self.arm.before, self.arm.after
        ymax = self.extent
        rate = qmax + self.k * (float(np.max(np.abs(self.x))) + ymax) / c
        if not math.isinf(self.w):
            rate += (ymax + a * qmax / self.k) / self.w ** 2
        width = 2 * math.pi / (8 * rate)
        out = []
        for lo, hi, v in self.arm.segments:
            m = max(1, int(math.ceil((hi - lo) / width)))
            out.append((lo, (hi - lo) / m, m, v))
        return out

    def _y_nodes(self, qmax: float):
        t, w = gauss_legendre(_Y_ORDER)
        ys, ws = [], []
        for lo, h, m, v in self._panels(qmax):
            mid = lo + (np.arange(m) + 0.5) * h
            ys.append((mid[:, None] + 0.5 * h * t[None, :]).ravel())
            ws.append(np.tile(0.5 * h * w, m) * v)
        return np.concatenate(ys), np.concatenate(ws)

    def evaluate(self, q: np.ndarray) -> np.ndarray:
        """Matrix ``G[x, q]``."""
        if not self.arm.masked:
            if self.grid is None:
                return gaussian_beam(self.x[:, None], q[None, :], self.arm.before, self.wl, self.w)
            x0, dx = self.grid
            e = _geometric_exp(self.beta, q, x0, dx, self.x.size)
            e *= self.yfac(self.x)[:, None]
            e *= self.qfac(q)[None, :]
            return e
        qmax = float(np.max(np.abs(q)))
        y, wy = self._y_nodes(qmax)
        h = fresnel_kernel(self.x[:, None] - y[None, :], self.arm.after, self.wl)
        h *= (wy * self.yfac(y))[None, :]
        t, _ = gauss_legendre(_Y_ORDER)
        out = np.zeros((self.x.size, q.size), dtype=np.complex128)
        step = max(1, _BATCH_ELEMENTS // max(y.size, 1))
        for s in range(0, q.size, step):
            qs = q[s:s + step]
            blocks = []
            for lo, hp, m, _ in self._panels(qmax):
                f = _geometric_exp(self.beta, qs, lo + 0.5 * hp, hp, m)
                sub = np.exp(self.beta * np.outer(0.5 * hp * t, qs))
                blocks.append((f[:, None, :] * sub[None, :, :]).reshape(m * _Y_ORDER, qs.size))
            out[:, s:s + step] = h @ np.concatenate(blocks, axis=0)
        out *= self.qfac(q)[None, :]
        return out

    def evaluate_direct(self, q: np.ndarray) -> np.ndarray:
        """Reference evaluation with one exponential per node (slow)."""
        if not self.arm.masked:
            return gaussian_beam(self.x[:, None], q[None, :], self.arm.before, self.wl, self.w)
        y, wy = self._y_nodes(float(np.max(np.abs(q))))
        h = fresnel_kernel(self.x[:, None] - y[None, :], self.arm.after, self.wl) * wy[None, :]
        if self.arm.before > 0:
            b = gaussian_beam(y[:, None], q[None, :], self.arm.before, self.wl, self.w)
        else:
            b = np.exp(1j * y[:, None] * q[None, :]) * self.spec.envelope(y)[:, None]
        return h @ b


@dataclass(frozen=True)
class CrossCorrelation:
    """Field correlation ``C[i, j] = <E1*(x1_i) E2(x2_j)>`` with the two mean intensities."""

    x1: np.ndarray
    x2: np.ndarray
    c: np.ndarray
    i1: np.ndarray
    i2: np.ndarray
    error: float = 0.0

    @property
    def g1sq(self) -> np.ndarray:
        return np.abs(self.c) ** 2 / np.outer(self.i1, self.i2)

    @property
    def g2(self) -> np.ndarray:
        return 1.0 + self.g1sq


def _q_range(spec: SpectrumModel, tol: float):
    if spec.kind == "gaussian":
        qmax = spec.width * math.sqrt(math.log(1e3 / tol))
        return -qmax, qmax, spec.width / 8
    return -spec.width, spec.width, spec.width / 8


def _finite_surface(m1: _Modes, m2: _Modes, spec: SpectrumModel, tol: float):
    qlo, qhi, qstep = _q_range(spec, tol)
    k = m1.k
    dchirp = abs(m1.chirp - m2.chirp)
    base = m1.extent + m2.extent
    wmax = qstep
    if not math.isinf(spec.envelope_width):
        longest = max(m1.chirp, m2.chirp, 1e-30)
        wmax = min(wmax, k * spec.envelope_width / (8 * longest))
    edges = oscillation_edges(qlo, qhi, lambda q: dchirp * abs(q) / k + base, max_width=wmax)

    def run(e):
        nodes, weights = panel_rule(e, _Q_ORDER)
        ww = weights * spec.power_spectrum(nodes)
        c = np.zeros((m1.x.size, m2.x.size), dtype=np.complex128)
        i1 = np.zeros(m1.x.size)
        i2 = np.zeros(m2.x.size)
        per = max(1, _BATCH_ELEMENTS // max(m1.x.size + m2.x.size, 1))
        for s in range(0, nodes.size, per):
            qs, ws = nodes[s:s + per], ww[s:s + per]
            g1 = m1.evaluate(qs)
            g2 = m2.evaluate(qs)
            c += np.conj(g1) @ (g2 * ws).T
            i1 += (g1.real ** 2 + g1.imag ** 2) @ ws
            i2 += (g2.real ** 2 + g2.imag ** 2) @ ws
        return c, i1, i2

    coarse = run(edges)
    fine = run(bisect_edges(edges))
    err = 0.0
    for a, b in zip(coarse, fine):
        scale = float(np.max(np.abs(b))) or 1.0
        err = max(err, float(np.max(np.abs(a - b))) / scale)
    if err > tol:
        raise QuadratureError(f"mode-sum quadrature error {err:.2e} exceeds tolerance {tol:.1e}",
                              fine, err)
    return fine[0], fine[1], fine[2], err


# ------------------------------------------------------------ broadband limit

def _broadband_pairs(a1: _Arm, a2: _Arm, w0: float, wl: float, x1, x2, tol: float):
    x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
    shape = x1.shape
    x1, x2 = x1.ravel(), x2.ravel()
    k = wavenumber(wl)
    pre = 2 * math.pi * w0
    if a1.masked and a2.masked:
        if not math.isclose(a1.before, a2.before, rel_tol=1e-12):
            raise UnsupportedCaseError("broadband route needs equal source-to-mask distances")
        c1, c2 = a1.after, a2.after
        out = np.zeros(x1.shape, dtype=np.complex128)
        reach1 = float(np.max(np.abs(x1)))
        reach2 = float(np.max(np.abs(x2)))
        for lo, hi, v in _overlap(a1.segments, a2.segments):
            ymax = max(abs(lo), abs(hi))
            rate = k * (reach1 + ymax) / c1 + k * (reach2 + ymax) / c2

            def f(y):
                return (np.conj(fresnel_kernel(x1[:, None] - y[None, :], c1, wl))
                        * fresnel_kernel(x2[:, None] - y[None, :], c2, wl))

            val, _ = integrate(f, lo, hi, rate=lambda y: rate, rtol=tol * 1e-3)
            out += v * val
        return (pre * out).reshape(shape)
    if a1.masked != a2.masked:
        if a2.masked:
            return np.conj(_broadband_pairs(a2, a1, w0, wl, x2, x1, tol)).reshape(shape)
        dz = a2.before - a1.before
        c1 = a1.after
        if dz == 0:
            val = _transmission_at(a1.segments, x2) * np.conj(fresnel_kernel(x1 - x2, c1, wl))
            return (pre * val).reshape(shape)
        out = np.zeros(x1.shape, dtype=np.complex128)
        reach = float(np.max(np.abs(x1))) + float(np.max(np.abs(x2)))
        for lo, hi, v in a1.segments:
            ymax = max(abs(lo), abs(hi))
            rate = k * (reach + ymax) / c1 + k * (reach + ymax) / abs(dz)

            def f(y):
                return (np.conj(fresnel_kernel(x1[:, None] - y[None, :], c1, wl))
                        * fresnel_kernel(x2[:, None] - y[None, :], dz, wl))

            val, _ = integrate(f, lo, hi, rate=lambda y: rate, rtol=tol * 1e-3)
            out += v * val
        return (pre * out).reshape(shape)
    dz = a2.before - a1.before
    if dz == 0:
        raise UnsupportedCaseError("equal free paths in the broadband limit give a delta correlation")
    return (pre * fresnel_kernel(x2 - x1, dz, wl)).reshape(shape)


def _broadband_mean(arm: _Arm, w0: float, wl: float, x):
    if not arm.masked:
        raise UnsupportedCaseError("a bare free path has unbounded mean intensity in the broadband limit")
    k = wavenumber(wl)
    area = sum(v * v * (hi - lo) for lo, hi, v in arm.segments)
    return np.full(np.shape(x), w0 * k / arm.after * area)


def _check_spec(spec: SpectrumModel):
    if spec.is_broadband and spec.has_envelope:
        raise UnsupportedCaseError("broadband route assumes no source envelope")


# ---------------------------------------------------------------- public API

def cross_correlation_surface(path1: PathSpec, path2: PathSpec, spec: SpectrumModel,
                              x1, x2, wavelength: float = 632.8e-9, *,
                              tol: float = 1e-6) -> CrossCorrelation:
    """Field correlation on the grid ``x1 x x2`` with mean intensities."""
    _check_spec(spec)
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    a1, a2 = _arm(path1), _arm(path2)
    if spec.is_broadband:
        g1, g2 = np.meshgrid(x1, x2, indexing="ij")
        c = _broadband_pairs(a1, a2, spec.w0, wavelength, g1, g2, tol)
        return CrossCorrelation(x1, x2, c, _broadband_mean(a1, spec.w0, wavelength, x1),
                                _broadband_mean(a2, spec.w0, wavelength, x2))
    c, i1, i2, err = _finite_surface(_Modes(a1, spec, wavelength, x1),
                                     _Modes(a2, spec, wavelength, x2), spec, tol)
    return CrossCorrelation(x1, x2, c, i1, i2, err)


def quadrature_cross_correlation(path1: PathSpec, path2: PathSpec, spec: SpectrumModel,
                                 x1, x2, wavelength: float = 632.8e-9, *, tol: float = 1e-6):
    """``<E1*(x1) E2(x2)>`` at paired positions (``x1`` and ``x2`` broadcast)."""
    _check_spec(spec)
    b1, b2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
    if spec.is_broadband:
        return _broadband_pairs(_arm(path1), _arm(path2), spec.w0, wavelength, b1, b2, tol)
    u1, inv1 = np.unique(b1.ravel(), return_inverse=True)
    u2, inv2 = np.unique(b2.ravel(), return_inverse=True)
    surf = cross_correlation_surface(path1, path2, spec, u1, u2, wavelength, tol=tol)
    return surf.c[inv1, inv2].reshape(b1.shape)


def mean_intensity(path: PathSpec, spec: SpectrumModel, x, wavelength: float = 632.8e-9, *,
                   tol: float = 1e-6):
    _check_spec(spec)
    arm = _arm(path)
    x = np.asarray(x, dtype=float)
    if spec.is_broadband:
        return _broadband_mean(arm, spec.w0, wavelength, x)
    m = _Modes(arm, spec, wavelength, np.atleast_1d(x).ravel())
    _, i, _, _ = _finite_surface(m, m, spec, tol)
    return i.reshape(x.shape)


def quadrature_g2(path1: PathSpec, path2: PathSpec, spec: SpectrumModel, x1, x2,
                  wavelength: float = 632.8e-9, *, tol: float = 1e-6):
    """Normalized ``1 + |<E1* E2>|^2 / (<I1><I2>)`` at paired positions."""
    _check_spec(spec)
    b1, b2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
    if spec.is_broadband:
        c = _broadband_pairs(_arm(path1), _arm(path2), spec.w0, wavelength, b1, b2, tol)
        i1 = _broadband_mean(_arm(path1), spec.w0, wavelength, b1)
        i2 = _broadband_mean(_arm(path2), spec.w0, wavelength, b2)
        return 1.0 + np.abs(c) ** 2 / (i1 * i2)
    u1, inv1 = np.unique(b1.ravel(), return_inverse=True)
    u2, inv2 = np.unique(b2.ravel(), return_inverse=True)
    surf = cross_correlation_surface(path1, path2, spec, u1, u2, wavelength, tol=tol)
    return surf.g2[inv1, inv2].reshape(b1.shape)
