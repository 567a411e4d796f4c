"""Streaming two-arm correlation estimator with block-jackknife errors."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.fft import irfft, next_fast_len, rfft

from . import kernels
from .errors import AxisMismatchError, InsufficientDataError, ValidationError
from .fringe import FringeMetrics, extract_fringe_metrics
from .grid import Axis, ComplexField, require_same_axis

__all__ = [
    "CorrelationAccumulator", "CorrelationResult", "SliceCurve", "BlockStats",
    "merge", "finalize", "siegert_residual", "scan_slice", "delta_axis",
]

BLOCK_SIZE = 100
FULL_SURFACE_LIMIT = 1 << 22
BLOCK_SURFACE_LIMIT = 1 << 12
INTENSITY_FLOOR = 1e-9


@dataclass
class BlockStats:
    """Partial sums of one jackknife block."""

    count: int
    s1: np.ndarray
    s2: np.ndarray
    diag: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    xrows: np.ndarray
    xcols: np.ndarray
    P: Optional[np.ndarray] = None
    X: Optional[np.ndarray] = None

    def copy(self) -> "BlockStats":
        return BlockStats(self.count, *(None if a is None else a.copy() for a in (
            self.s1, self.s2, self.diag, self.rows, self.cols, self.xrows, self.xcols, self.P, self.X)))


def _intensity(e: np.ndarray) -> np.ndarray:
    return e.real * e.real + e.imag * e.imag


def _rowsum(a: np.ndarray) -> np.ndarray:
    out = np.zeros(a.shape[1:], dtype=a.dtype)
    for r in range(a.shape[0]):
        out += a[r]
    return out


class CorrelationAccumulator:
    """Running sums of ``I1``, ``I2``, ``I1 (x) I2`` and ``conj(E1) (x) E2``.

    The full surfaces are kept when ``n1 * n2 <= full_limit``; otherwise only
    the tracked rows (fixed ``x1``), tracked columns (fixed ``x2``) and the
    diagonal sums over ``i - j`` are kept. Realizations are grouped into
    blocks of ``block_size`` in arrival order for the jackknife.
    """

    def __init__(self, axis1: Axis, axis2: Axis, *, track_rows: Sequence[int] = (),
                 track_cols: Sequence[int] = (), block_size: int = BLOCK_SIZE,
                 mode: str = "auto", full_limit: int = FULL_SURFACE_LIMIT,
                 block_surface_limit: int = BLOCK_SURFACE_LIMIT, backend: Optional[str] = None):
        if mode not in ("auto", "full", "slices"):
            raise ValidationError(f"unknown accumulation mode {mode!r}")
        if block_size < 1:
            raise ValidationError("block size must be positive")
        self.axis1, self.axis2 = axis1, axis2
        n1, n2 = axis1.n, axis2.n
        if mode == "auto":
            mode = "full" if n1 * n2 <= full_limit else "slices"
        self.mode = mode
        self.block_size = int(block_size)
        self.keep_block_surfaces = mode == "full" and n1 * n2 <= block_surface_limit
        self.backend = backend
        self.track_rows = tuple(sorted({int(i) for i in track_rows}))
        self.track_cols = tuple(sorted({int(j) for j in track_cols}))
        for i in self.track_rows:
            if not 0 <= i < n1:
                raise ValidationError(f"tracked row {i} outside axis 1")
        for j in self.track_cols:
            if not 0 <= j < n2:
                raise ValidationError(f"tracked column {j} outside axis 2")
        self.count = 0
        self.sum_I1 = np.zeros(n1)
        self.sum_I2 = np.zeros(n2)
        self.diag = np.zeros(n1 + n2 - 1)
        if mode == "full":
            self.sum_I1I2 = np.zeros((n1, n2))
            self._xr = np.zeros((n1, n2))
            self._xi = np.zeros((n1, n2))
        else:
            self.sum_I1I2 = None
            self._xr = self._xi = None
        self.rows = np.zeros((len(self.track_rows), n2))
        self.cols = np.zeros((len(self.track_cols), n1))
        self.xrows = np.zeros((len(self.track_rows), n2), dtype=np.complex128)
        self.xcols = np.zeros((len(self.track_cols), n1), dtype=np.complex128)
        self.blocks: list = []

    # -- construction helpers
    def empty_like(self) -> "CorrelationAccumulator":
        out = CorrelationAccumulator.__new__(CorrelationAccumulator)
        out.__dict__.update({k: v for k, v in self.__dict__.items()})
        out.count = 0
        for name in ("sum_I1", "sum_I2", "diag", "sum_I1I2", "_xr", "_xi",
                     "rows", "cols", "xrows", "xcols"):
            v = getattr(self, name)
            setattr(out, name, None if v is None else np.zeros_like(v))
        out.blocks = []
        return out

    def copy(self) -> "CorrelationAccumulator":
        out = self.empty_like()
        out.count = self.count
        for name in ("sum_I1", "sum_I2", "diag", "sum_I1I2", "_xr", "_xi",
                     "rows", "cols", "xrows", "xcols"):
            v = getattr(self, name)
            setattr(out, name, None if v is None else v.copy())
        out.blocks = [b.copy() for b in self.blocks]
        return out

    @property
    def sum_E1cE2(self) -> Optional[np.ndarray]:
        if self._xr is None:
            return None
        return self._xr + 1j * self._xi

    def compatible(self, other: "CorrelationAccumulator") -> bool:
        return (self.axis1.matches(other.axis1) and self.axis2.matches(other.axis2)
                and self.mode == other.mode and self.track_rows == other.track_rows
                and self.track_cols == other.track_cols)

    # -- accumulation
    def _new_block(self) -> BlockStats:
        n1, n2 = self.axis1.n, self.axis2.n
        nr, nc = len(self.track_rows), len(self.track_cols)
        surf = self.keep_block_surfaces
        return BlockStats(0, np.zeros(n1), np.zeros(n2), np.zeros(n1 + n2 - 1),
                          np.zeros((nr, n2)), np.zeros((nc, n1)),
                          np.zeros((nr, n2), dtype=np.complex128),
                          np.zeros((nc, n1), dtype=np.complex128),
                          np.zeros((n1, n2)) if surf else None,
                          np.zeros((n1, n2), dtype=np.complex128) if surf else None)

    def accumulate(self, E1: ComplexField, E2: ComplexField) -> "CorrelationAccumulator":
        """Add one realization pair; returns ``self``."""
        require_same_axis(E1.axis, self.axis1, "arm-1 field and accumulator")
        require_same_axis(E2.axis, self.axis2, "arm-2 field and accumulator")
        return self.accumulate_batch(E1.values[None, :], E2.values[None, :])

    def accumulate_batch(self, E1: np.ndarray, E2: np.ndarray) -> "CorrelationAccumulator":
        """Add realization pairs given as rows of two complex arrays."""
        E1 = np.atleast_2d(np.asarray(E1, dtype=np.complex128))
        E2 = np.atleast_2d(np.asarray(E2, dtype=np.complex128))
        if E1.shape[1] != self.axis1.n or E2.shape[1] != self.axis2.n:
            raise AxisMismatchError("field samples do not match the accumulator axes")
        if E1.shape[0] != E2.shape[0]:
            raise ValidationError("arm batches hold different numbers of realizations")
        s = 0
        while s < E1.shape[0]:
            if not self.blocks or self.blocks[-1].count >= self.block_size:
                self.blocks.append(self._new_block())
            blk = self.blocks[-1]
            take = min(self.block_size - blk.count, E1.shape[0] - s)
            self._add(blk, E1[s:s + take], E2[s:s + take])
            s += take
        return self

    def _add(self, blk: BlockStats, e1: np.ndarray, e2: np.ndarray) -> None:
        m = e1.shape[0]
        i1, i2 = _intensity(e1), _intensity(e2)
        s1, s2 = _rowsum(i1), _rowsum(i2)
        self.sum_I1 += s1
        self.sum_I2 += s2
        blk.s1 += s1
        blk.s2 += s2
        rows, cols = list(self.track_rows), list(self.track_cols)
        if self.mode == "full":
            n1, n2 = self.axis1.n, self.axis2.n
            tp, txr, txi = np.zeros((n1, n2)), np.zeros((n1, n2)), np.zeros((n1, n2))
            kernels.outer_accumulate(tp, txr, txi, e1, e2, backend=self.backend)
            d = kernels.diagonal_sums(tp, backend=self.backend)
            self.sum_I1I2 += tp
            self._xr += txr
            self._xi += txi
            r_p, c_p = tp[rows], tp[:, cols].T
            r_x = txr[rows] + 1j * txi[rows]
            c_x = (txr[:, cols] + 1j * txi[:, cols]).T
            if blk.P is not None:
                blk.P += tp
                blk.X += txr + 1j * txi
        else:
            d = self._diag_fft(i1, i2)
            r_p = np.zeros((len(rows), self.axis2.n))
            c_p = np.zeros((len(cols), self.axis1.n))
            r_x = np.zeros((len(rows), self.axis2.n), dtype=np.complex128)
            c_x = np.zeros((len(cols), self.axis1.n), dtype=np.complex128)
            for r in range(m):
                if rows:
                    r_p += i1[r, rows][:, None] * i2[r][None, :]
                    r_x += np.conj(e1[r, rows])[:, None] * e2[r][None, :]
                if cols:
                    c_p += i2[r, cols][:, None] * i1[r][None, :]
                    c_x += e2[r, cols][:, None] * np.conj(e1[r])[None, :]
        self.diag += d
        blk.diag += d
        self.rows += r_p
        self.cols += c_p
        self.xrows += r_x
        self.xcols += c_x
        blk.rows += r_p
        blk.cols += c_p
        blk.xrows += r_x
        blk.xcols += c_x
        self.count += m
        blk.count += m

    def _diag_fft(self, i1: np.ndarray, i2: np.ndarray) -> np.ndarray:
        n1, n2 = i1.shape[1], i2.shape[1]
        size = n1 + n2 - 1
        nfft = next_fast_len(size, real=True)
        f1 = rfft(i1, nfft, axis=-1)
        f2 = rfft(i2[:, ::-1], nfft, axis=-1)
        acc = np.zeros(f1.shape[1], dtype=np.complex128)
        for r in range(i1.shape[0]):
            acc += f1[r] * f2[r]
        return irfft(acc, nfft)[:size]

    # -- reduction
    def merge(self, other: "CorrelationAccumulator") -> "CorrelationAccumulator":
        """Elementwise sum of two accumulators on equal axes (new object)."""
        if not self.compatible(other):
            raise AxisMismatchError("cannot merge accumulators with different axes or layouts")
        return self.copy().merge_into(other)

    def merge_into(self, other: "CorrelationAccumulator") -> "CorrelationAccumulator":
        """In-place form of :meth:`merge`; returns ``self``."""
        if not self.compatible(other):
            raise AxisMismatchError("cannot merge accumulators with different axes or layouts")
        self.count += other.count
        for name in ("sum_I1", "sum_I2", "diag", "sum_I1I2", "_xr", "_xi",
                     "rows", "cols", "xrows", "xcols"):
            v = getattr(self, name)
            if v is not None:
                v += getattr(other, name)
        self.blocks.extend(b.copy() for b in other.blocks)
        return self

    def finalize(self, floor: float = INTENSITY_FLOOR, metadata: Optional[dict] = None):
        return finalize(self, floor, metadata)


def merge(a: CorrelationAccumulator, b: CorrelationAccumulator) -> CorrelationAccumulator:
    return a.merge(b)


@dataclass(frozen=True)
class SliceCurve:
    """A sampled curve with standard errors and per-sample flags."""

    coords: np.ndarray
    g2: np.ndarray
    stderr: np.ndarray
    flags: np.ndarray
    label: str = ""
    oracle: Optional[np.ndarray] = None
    replicates: Optional[np.ndarray] = None

    def with_oracle(self, oracle: np.ndarray) -> "SliceCurve":
        return SliceCurve(self.coords, self.g2, self.stderr, self.flags, self.label,
                          np.asarray(oracle, dtype=float), self.replicates)

    def statistic(self, fn: Callable[[np.ndarray], float]):
        """``fn`` of the curve and its delete-one-block jackknife standard error."""
        value = float(fn(self.g2))
        if self.replicates is None or len(self.replicates) < 2:
            return value, math.nan
        reps = []
        for rep in self.replicates:
            try:
                reps.append(float(fn(rep)))
            except Exception:
                continue
        return value, _jackknife_se(np.asarray(reps))

    def fringe_metrics(self, period_hint: float, fit_halfwidth: int = 1, window: float = 4.0,
                       origin: float = 0.0):
        """Fringe metrics within ``window`` hint periods of ``origin``, with jackknife errors.

        Returns ``(metrics, stderr)`` where ``stderr`` maps ``visibility`` and
        ``period`` to block-jackknife standard errors (NaN if unavailable).
        """
        half = window * period_hint
        sel = np.abs(self.coords - origin) <= half * (1 + 1e-12)
        u = self.coords[sel] - origin
        met = extract_fringe_metrics(u, self.g2[sel], period_hint, fit_halfwidth=fit_halfwidth)
        se = {"visibility": math.nan, "period": math.nan}
        if self.replicates is not None and len(self.replicates) >= 2:
            vis, per = [], []
            for rep in self.replicates:
                try:
                    m = extract_fringe_metrics(u, rep[sel], period_hint,
                                               fit_halfwidth=fit_halfwidth)
                except Exception:
                    continue
                vis.append(m.visibility)
                per.append(m.period)
            se["visibility"] = _jackknife_se(np.asarray(vis))
            se["period"] = _jackknife_se(np.asarray(per))
        return met, se


@dataclass
class CorrelationResult:
    """Normalized correlation estimates.

    ``g2``, ``g1sq`` and the error surfaces are ``None`` in slices mode. Flagged
    (dark) samples hold NaN in every normalized quantity.
    """

    axis1: Axis
    axis2: Axis
    count: int
    mean1: np.ndarray
    mean2: np.ndarray
    dark1: np.ndarray
    dark2: np.ndarray
    g2: Optional[np.ndarray]
    g1sq: Optional[np.ndarray]
    stderr: Optional[np.ndarray]
    g1sq_stderr: Optional[np.ndarray]
    residual_stderr: Optional[np.ndarray]
    delta: Optional[np.ndarray]
    delta_g2: np.ndarray
    delta_stderr: np.ndarray
    delta_flags: np.ndarray
    delta_replicates: Optional[np.ndarray]
    track_rows: tuple
    track_cols: tuple
    row_g2: np.ndarray
    row_stderr: np.ndarray
    row_g1sq: np.ndarray
    col_g2: np.ndarray
    col_stderr: np.ndarray
    col_g1sq: np.ndarray
    row_replicates: Optional[np.ndarray]
    col_replicates: Optional[np.ndarray]
    blocks: int
    metadata: dict = field(default_factory=dict)

    @property
    def flags(self) -> np.ndarray:
        return self.dark1[:, None] | self.dark2[None, :]

    def delta_curve(self) -> SliceCurve:
        if self.delta is None:
            raise ValidationError("delta curve needs equal pitch on both axes")
        return SliceCurve(self.delta, self.delta_g2, self.delta_stderr, self.delta_flags, "delta",
                          replicates=self.delta_replicates)

    def fringe_metrics(self, period_hint: float, fit_halfwidth: int = 1, window: float = 4.0):
        """Fringe metrics of the separation curve; see :meth:`SliceCurve.fringe_metrics`."""
        return self.delta_curve().fringe_metrics(period_hint, fit_halfwidth, window)


def _jackknife_se(reps: np.ndarray) -> float:
    reps = reps[np.isfinite(reps)]
    b = len(reps)
    if b < 2:
        return math.nan
    return float(math.sqrt((b - 1) / b * np.sum((reps - reps.mean()) ** 2)))


def _jackknife_se_array(reps: np.ndarray) -> np.ndarray:
    b = reps.shape[0]
    if b < 2:
        return np.full(reps.shape[1:], np.nan)
    mean = reps.mean(axis=0)
    return np.sqrt((b - 1) / b * np.sum((reps - mean) ** 2, axis=0))


def delta_axis(axis1: Axis, axis2: Axis) -> Optional[np.ndarray]:
    """Separation ``x1 - x2`` for each diagonal index ``i - j + n2 - 1``."""
    if not math.isclose(axis1.dx, axis2.dx, rel_tol=1e-12):
        return None
    n1, n2 = axis1.n, axis2.n
    m = np.arange(n1 + n2 - 1)
    return (axis1.center - axis2.center) + (m - (n2 - 1) - (n1 - n2) / 2.0) * axis1.dx


def _safe_ratio(num, den, ok):
    out = np.full(np.broadcast(num, den).shape, np.nan)
    np.divide(num, den, out=out, where=ok)
    return out


def finalize(acc: CorrelationAccumulator, floor: float = INTENSITY_FLOOR,
             metadata: Optional[dict] = None) -> CorrelationResult:
    """Normalize the sums; standard errors from the delete-one-block jackknife."""
    n = acc.count
    if n < 2:
        raise InsufficientDataError(f"need at least 2 realizations, have {n}")
    m1, m2 = acc.sum_I1 / n, acc.sum_I2 / n
    if not (m1.max() > 0 and m2.max() > 0):
        raise InsufficientDataError("a detector is dark everywhere")
    dark1 = m1 <= floor * m1.max()
    dark2 = m2 <= floor * m2.max()
    lit = ~(dark1[:, None] | dark2[None, :])
    blocks = [b for b in acc.blocks if b.count > 0]
    nb = len(blocks)
    jack = nb >= 2 and all(b.count < n for b in blocks)

    def loo_means(b):
        k = n - b.count
        return (acc.sum_I1 - b.s1) / k, (acc.sum_I2 - b.s2) / k, k

    g2 = g1sq = se = se1 = se_res = None
    if acc.mode == "full":
        mm = np.outer(m1, m2)
        g2 = _safe_ratio(acc.sum_I1I2 / n, mm, lit)
        x = acc.sum_E1cE2 / n
        g1sq = _safe_ratio(x.real ** 2 + x.imag ** 2, mm, lit)
        if jack and blocks[0].P is not None:
            reps_g2, reps_g1, reps_r = [], [], []
            for b in blocks:
                l1, l2, k = loo_means(b)
                mmb = np.outer(l1, l2)
                rg2 = _safe_ratio((acc.sum_I1I2 - b.P) / k, mmb, lit)
                xb = (acc.sum_E1cE2 - b.X) / k
                rg1 = _safe_ratio(xb.real ** 2 + xb.imag ** 2, mmb, lit)
                reps_g2.append(rg2)
                reps_g1.append(rg1)
                reps_r.append(rg2 - 1.0 - rg1)
            se = _jackknife_se_array(np.asarray(reps_g2))
            se1 = _jackknife_se_array(np.asarray(reps_g1))
            se_res = _jackknife_se_array(np.asarray(reps_r))

    delta = delta_axis(acc.axis1, acc.axis2)
    den = np.convolve(m1, m2[::-1])
    dok = den > floor * den.max()
    dg2 = _safe_ratio(acc.diag / n, den, dok)
    dreps = None
    dse = np.full(dg2.shape, np.nan)
    if jack:
        dreps = np.empty((nb, dg2.size))
        for r, b in enumerate(blocks):
            l1, l2, k = loo_means(b)
            dreps[r] = _safe_ratio((acc.diag - b.diag) / k, np.convolve(l1, l2[::-1]), dok)
        dse = _jackknife_se_array(dreps)

    def slices(sums, xsums, idx, fixed_mean, other_mean, fixed_dark, other_dark, which):
        k_ = len(idx)
        g = np.full((k_, other_mean.size), np.nan)
        g1 = np.full((k_, other_mean.size), np.nan)
        s = np.full((k_, other_mean.size), np.nan)
        allreps = np.full((k_, nb, other_mean.size), np.nan) if jack else None
        for t, i in enumerate(idx):
            ok = ~(other_dark | fixed_dark[i])
            den_ = fixed_mean[i] * other_mean
            g[t] = _safe_ratio(sums[t] / n, den_, ok)
            xx = xsums[t] / n
            g1[t] = _safe_ratio(xx.real ** 2 + xx.imag ** 2, den_, ok)
            if jack:
                reps = []
                for b in blocks:
                    l1, l2, kk = loo_means(b)
                    lf, lo = (l1, l2) if which == "row" else (l2, l1)
                    bsum = (b.rows if which == "row" else b.cols)[t]
                    reps.append(_safe_ratio((sums[t] - bsum) / kk, lf[i] * lo, ok))
                allreps[t] = reps
                s[t] = _jackknife_se_array(allreps[t])
        return g, s, g1, allreps

    rg, rs, r1, rr = slices(acc.rows, acc.xrows, acc.track_rows, m1, m2, dark1, dark2, "row")
    cg, cs, c1, cr = slices(acc.cols, acc.xcols, acc.track_cols, m2, m1, dark2, dark1, "col")
    meta = {"count": n, "blocks": nb, "mode": acc.mode}
    if metadata:
        meta.update(metadata)
    return CorrelationResult(
        acc.axis1, acc.axis2, n, m1, m2, dark1, dark2, g2, g1sq, se, se1, se_res,
        delta, dg2, dse, ~dok, dreps, acc.track_rows, acc.track_cols,
        rg, rs, r1, cg, cs, c1, rr, cr, nb, meta)


def siegert_residual(res: CorrelationResult, normalized: bool = True) -> float:
    """Largest ``|g2 - 1 - g1sq|`` over lit samples, in standard-error units.

    Returns NaN when the residual has no usable error estimate (fewer than two
    blocks, or zero variance as for deterministic input). With
    ``normalized=False`` the raw maximum is returned.
    """
    if res.g2 is None or res.g1sq is None:
        return math.nan
    r = res.g2 - 1.0 - res.g1sq
    lit = ~res.flags & np.isfinite(r)
    if not lit.any():
        return math.nan
    if not normalized:
        return float(np.max(np.abs(r[lit])))
    se = res.residual_stderr
    if se is None:
        return math.nan
    ok = lit & np.isfinite(se) & (se > 0)
    if not ok.any():
        return math.nan
    return float(np.max(np.abs(r[ok]) / se[ok]))


def scan_slice(res: CorrelationResult, fixed_arm: int, fixed_position: float) -> SliceCurve:
    """g2 along the free arm with the other arm's detector at ``fixed_position``."""
    if fixed_arm not in (1, 2):
        raise ValidationError("fixed_arm must be 1 or 2")
    fixed_axis = res.axis1 if fixed_arm == 1 else res.axis2
    free_axis = res.axis2 if fixed_arm == 1 else res.axis1
    i = fixed_axis.index_of(fixed_position)
    tracked = res.track_rows if fixed_arm == 1 else res.track_cols
    flags_free = res.dark2 if fixed_arm == 1 else res.dark1
    fixed_dark = (res.dark1 if fixed_arm == 1 else res.dark2)[i]
    flags = flags_free | fixed_dark
    label = f"arm{fixed_arm}@{fixed_axis.coords[i]:.6e}"
    if i in tracked:
        t = tracked.index(i)
        g = (res.row_g2 if fixed_arm == 1 else res.col_g2)[t]
        s = (res.row_stderr if fixed_arm == 1 else res.col_stderr)[t]
        reps = res.row_replicates if fixed_arm == 1 else res.col_replicates
        return SliceCurve(free_axis.coords, g.copy(), s.copy(), flags, label,
                          replicates=None if reps is None else reps[t].copy())
    if res.g2 is None:
        raise InsufficientDataError("position was not tracked and no full surface was kept")
    g = res.g2[i] if fixed_arm == 1 else res.g2[:, i]
    if res.stderr is not None:
        s = res.stderr[i] if fixed_arm == 1 else res.stderr[:, i]
    else:
        s = np.full(free_axis.n, np.nan)
    return SliceCurve(free_axis.coords, g.copy(), s.copy(), flags, label)
