"""Visibility, period and fringe detection on a sampled correlation curve."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, ValidationError

__all__ = ["FringeMetrics", "extract_fringe_metrics", "modulation_amplitude", "fit_fringe_period"]

FRINGE_THRESHOLD = 0.05


@dataclass(frozen=True)
class FringeMetrics:
    """Fringe summary of a curve peaked at zero separation.

    ``period`` is NaN unless a flanking minimum was found on both sides.
    ``visibility`` is 0 when no flanking minimum exists.
    """

    visibility: float
    period: float
    is_fringe: bool
    peak: float
    minima: tuple
    minima_positions: tuple
    modulation: float
    mean: float


def modulation_amplitude(delta: np.ndarray, curve: np.ndarray, period: float):
    """Amplitude of the ``1/period`` component over ``|delta| <= period``, and the window mean."""
    sel = (np.abs(delta) <= period) & np.isfinite(curve)
    c = curve[sel]
    if c.size < 8:
        raise InsufficientDataError("too few finite samples to project onto the fringe frequency")
    mean = float(c.mean())
    proj = np.sum((c - mean) * np.exp(-2j * np.pi * delta[sel] / period))
    return 2.0 * abs(proj) / c.size, mean


def _first_minimum(idx: np.ndarray, smooth: np.ndarray):
    # idx runs outward from zero separation; returns position in idx or None
    for p in range(1, len(idx) - 1):
        a, m, b = smooth[idx[p - 1]], smooth[idx[p]], smooth[idx[p + 1]]
        if m < a and m <= b:
            return p
    return None


def _vertex(delta, curve, i, h, step):
    lo, hi = max(i - h, 0), min(i + h, len(curve) - 1)
    u = np.arange(lo, hi + 1) - i
    y = curve[lo:hi + 1]
    ok = np.isfinite(y)
    u, y = u[ok], y[ok]
    if len(u) >= 3:
        a, b, c = np.polyfit(u.astype(float), y, 2)
        if a > 0:
            us = -b / (2 * a)
            if abs(us) <= h:
                return float(c + us * (b + a * us)), float(delta[i] + us * step)
        return float(c), float(delta[i])
    return float(curve[i]), float(delta[i])


def extract_fringe_metrics(delta, curve, expected_period_hint: float, *,
                           fit_halfwidth: int = 1) -> FringeMetrics:
    """Visibility and period of a fringe curve centered on zero separation.

    The maximum is the sample at zero separation. On each side the nearest
    local minimum within 1.5 hinted periods is located on a running mean of
    ``2 * fit_halfwidth + 1`` samples and refined by a least-squares parabola
    over the same span. Visibility is ``(max - m) / (max + m)`` with ``m`` the
    mean of the flanking minima.

    Parameters
    ----------
    delta : array_like
        Uniformly spaced, increasing separations.
    curve : array_like
        Curve values; NaN marks flagged samples.
    expected_period_hint : float
        Approximate fringe period, same units as ``delta``.
    fit_halfwidth : int
        Half-width in samples of the smoothing and vertex fit; raise it for
        noisy curves.
    """
    delta = np.asarray(delta, dtype=float)
    curve = np.asarray(curve, dtype=float)
    if delta.shape != curve.shape or delta.ndim != 1 or delta.size < 3:
        raise ValidationError("delta and curve must be equal-length 1D arrays")
    step = float(delta[1] - delta[0])
    if not step > 0:
        raise ValidationError("delta must be increasing")
    lam = float(expected_period_hint)
    if not (math.isfinite(lam) and lam > 4 * step):
        raise ValidationError("period hint must exceed 4 grid steps")
    if delta[-1] - delta[0] < 2 * lam or delta[0] > -0.5 * lam or delta[-1] < 0.5 * lam:
        raise InsufficientDataError("curve must span at least two hinted periods around zero")
    i0 = int(np.argmin(np.abs(delta)))
    if abs(delta[i0]) > 0.5 * step or not np.isfinite(curve[i0]):
        raise InsufficientDataError("curve has no finite sample at zero separation")
    peak = float(curve[i0])
    h = max(int(fit_halfwidth), 1)
    kernel = np.ones(2 * h + 1) / (2 * h + 1)
    finite = np.isfinite(curve)
    # flagged samples are bridged linearly so they cannot pose as minima
    filled = np.interp(delta, delta[finite], curve[finite])
    smooth = np.convolve(filled, kernel, mode="same")
    smooth[:h] = np.inf
    smooth[len(smooth) - h:] = np.inf

    reach = 1.5 * lam
    right = np.flatnonzero((delta >= 0) & (delta <= reach + 1e-9 * step))
    left = np.flatnonzero((delta <= 0) & (delta >= -reach - 1e-9 * step))[::-1]
    found = []
    for idx in (left, right):
        p = _first_minimum(idx, smooth)
        found.append(None if p is None else _vertex(delta, curve, int(idx[p]), h, step))
    mins = [f for f in found if f is not None]
    if mins:
        m = float(np.mean([v for v, _ in mins]))
        vis = (peak - m) / (peak + m)
    else:
        vis = 0.0
    period = found[1][1] - found[0][1] if all(f is not None for f in found) else math.nan
    amp, mean = modulation_amplitude(delta, curve, lam)
    return FringeMetrics(
        visibility=float(vis), period=float(period),
        is_fringe=bool(amp > FRINGE_THRESHOLD * mean), peak=peak,
        minima=tuple(math.nan if f is None else f[0] for f in found),
        minima_positions=tuple(math.nan if f is None else f[1] for f in found),
        modulation=float(amp), mean=mean)


def fit_fringe_period(delta, curve, expected_period_hint: float, *, window: float = 3.0,
                      degree: int = 4, search: float = 0.3, grid: int = 241) -> float:
    """Fringe period from a least-squares fit over the whole window.

    Fits ``P(u) + Q(u) cos(2 pi u / period)`` with ``P`` and ``Q`` even
    polynomials of ``degree`` in ``u`` over ``|u| <= window * hint``, so a
    slowly varying envelope and background are absorbed. The period
    minimizing the residual is bracketed on a grid spanning
    ``(1 +- search) * hint`` and refined by bounded scalar minimization.
    Suited to weak fringes under correlated noise, where minima positions
    are unreliable.

    Parameters
    ----------
    delta, curve : array_like
        Separations (centered on the fringe peak) and curve values; NaN
        samples are ignored.
    expected_period_hint : float
        Approximate period, same units as ``delta``.
    """
    from scipy.optimize import minimize_scalar

    delta = np.asarray(delta, dtype=float)
    curve = np.asarray(curve, dtype=float)
    if delta.shape != curve.shape or delta.ndim != 1:
        raise ValidationError("delta and curve must be equal-length 1D arrays")
    lam = float(expected_period_hint)
    if not (math.isfinite(lam) and lam > 0):
        raise ValidationError("period hint must be positive")
    half = window * lam
    sel = (np.abs(delta) <= half) & np.isfinite(curve)
    u, y = delta[sel], curve[sel]
    powers = list(range(0, degree + 1, 2))
    if u.size < 4 * len(powers) or u.max() - u.min() < 2 * lam:
        raise InsufficientDataError("too few samples in the fit window")
    t = u / half
    env = np.column_stack([t ** k for k in powers])

    def rss(period: float) -> float:
        a = np.hstack([env, env * np.cos(2 * np.pi * u / period)[:, None]])
        coef, *_ = np.linalg.lstsq(a, y, rcond=None)
        r = y - a @ coef
        return float(r @ r)

    trial = np.linspace(1 - search, 1 + search, grid) * lam
    values = np.array([rss(p) for p in trial])
    i = int(np.clip(np.argmin(values), 1, grid - 2))
    best = minimize_scalar(rss, bounds=(trial[i - 1], trial[i + 1]), method="bounded",
                           options={"xatol": 1e-9 * lam})
    return float(best.x)
