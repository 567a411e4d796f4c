"""Composite Gauss-Legendre rules with oscillation-aware panels."""
from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .errors import QuadratureError

__all__ = ["gauss_legendre", "oscillation_edges", "panel_rule", "bisect_edges", "integrate"]

PANEL_FRACTION = 1.0 / 8.0
ROUNDOFF = 64 * np.finfo(float).eps


@lru_cache(maxsize=32)
def gauss_legendre(order: int):
    t, w = np.polynomial.legendre.leggauss(order)
    t.flags.writeable = False
    w.flags.writeable = False
    return t, w


def oscillation_edges(a: float, b: float, rate: Optional[Callable[[float], float]] = None,
                      max_width: float = math.inf, fraction: float = PANEL_FRACTION,
                      max_panels: int = 5_000_000) -> np.ndarray:
    """Panel edges on ``[a, b]`` no wider than ``fraction`` of the local phase period.

    ``rate(x)`` bounds the phase derivative (rad per unit) near ``x``; each panel
    uses the larger bound at its two ends.
    """
    if not b > a:
        raise ValueError("need b > a")
    if rate is None:
        width = min(max_width, b - a)
        m = max(1, int(math.ceil((b - a) / width)))
        return np.linspace(a, b, m + 1)
    edges = [a]
    x = a
    step = 2.0 * math.pi * fraction
    while x < b:
        r = max(rate(x), 1e-300)
        h = min(max_width, step / r, b - x)
        r2 = rate(min(x + h, b))
        if r2 > r:
            h = min(h, step / r2)
        x = b if x + h >= b - 1e-12 * (b - a) else x + h
        edges.append(x)
        if len(edges) > max_panels:
            raise QuadratureError("panel budget exhausted while resolving oscillations",
                                  float("nan"), float("inf"))
    return np.asarray(edges)


def bisect_edges(edges: np.ndarray) -> np.ndarray:
    out = np.empty(2 * len(edges) - 1)
    out[0::2] = edges
    out[1::2] = 0.5 * (edges[:-1] + edges[1:])
    return out


def panel_rule(edges: np.ndarray, order: int = 4):
    """Nodes and weights of the composite rule on consecutive ``edges``."""
    t, w = gauss_legendre(order)
    edges = np.asarray(edges, dtype=float)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def integrate(f: Callable[[np.ndarray], np.ndarray], a: float, b: float, *,
              rate: Optional[Callable[[float], float]] = None, order: int = 8,
              atol: float = 0.0, rtol: float = 1e-10, max_width: float = math.inf,
              max_depth: int = 40, chunk: int = 4096, max_panels: int = 1 << 20):
    """Adaptive integral of a (possibly vector-valued) function over ``[a, b]``.

    ``f`` maps an array of abscissae of shape ``(m,)`` to values of shape
    ``(..., m)``. Every panel is compared against its two halves and bisected
    until the difference fits its share of the tolerance, which is
    ``max(atol, rtol * max|I|)`` spread in proportion to panel width.
    Raises QuadratureError after ``max_depth`` rounds or once more than
    ``max_panels`` panels would still need bisection.

    Returns
    -------
    value, error : ndarray, float
    """
    edges = oscillation_edges(a, b, rate, max_width)
    lo, hi = edges[:-1], edges[1:]
    t, w = gauss_legendre(order)
    total = None
    err_total = 0.0
    length = b - a
    for _ in range(max_depth):
        coarse_parts, fine_parts, floor_parts = [], [], []
        for s in range(0, len(lo), chunk):
            l, h = lo[s:s + chunk], hi[s:s + chunk]
            mid, half = 0.5 * (l + h), 0.5 * (h - l)
            xc = mid[:, None] + half[:, None] * t
            q = 0.5 * half
            xl = (l + q)[:, None] + q[:, None] * t
            xr = (mid + q)[:, None] + q[:, None] * t
            m = len(l)
            vals = np.asarray(f(np.concatenate([xc.ravel(), xl.ravel(), xr.ravel()])))
            vals = vals.reshape(vals.shape[:-1] + (3, m, order))
            coarse_parts.append(np.einsum("...pk,k->...p", vals[..., 0, :, :], w) * half)
            fine_parts.append((np.einsum("...pk,k->...p", vals[..., 1, :, :], w)
                               + np.einsum("...pk,k->...p", vals[..., 2, :, :], w)) * q)
            mag = np.abs(vals).reshape(-1, 3, m, order).max(axis=(0, 1, 3))
            floor_parts.append(ROUNDOFF * mag * (h - l))
        coarse = np.concatenate(coarse_parts, axis=-1)
        fine = np.concatenate(fine_parts, axis=-1)
        diff = np.abs(fine - coarse)
        perr = diff.reshape(-1, diff.shape[-1]).max(axis=0)
        estimate = fine.sum(axis=-1) + (0 if total is None else total)
        scale = max(atol, rtol * float(np.max(np.abs(estimate))))
        allowed = scale * (hi - lo) / length
        # panels whose halves agree to rounding cannot improve by bisection
        ok = (perr <= allowed) | (perr <= np.concatenate(floor_parts))
        part = fine[..., ok].sum(axis=-1)
        total = part if total is None else total + part
        err_total += float(perr[ok].sum())
        if ok.all():
            return total, err_total
        bad_lo, bad_hi = lo[~ok], hi[~ok]
        if 2 * bad_lo.size > max_panels:
            break
        mids = 0.5 * (bad_lo + bad_hi)
        lo = np.concatenate([bad_lo, mids])
        hi = np.concatenate([mids, bad_hi])
        order_ix = np.argsort(lo, kind="stable")
        lo, hi = lo[order_ix], hi[order_ix]
    pending = float(perr[~ok].sum())
    estimate = total + fine[..., ~ok].sum(axis=-1)
    raise QuadratureError(
        f"adaptive quadrature did not converge on [{a!r}, {b!r}] "
        f"(estimated error {err_total + pending:.3e})", estimate, err_total + pending)
