"""CSV, SVG and report serialization."""
from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .correlation import SliceCurve

__all__ = ["emit_csv", "read_csv", "emit_plot", "MetricLine", "RunReport", "CSV_HEADER"]

CSV_HEADER = "coordinate_m,g2,stderr,oracle_g2,flag"


def _num(v: float) -> str:
    return "" if v is None or not math.isfinite(v) else f"{v:.16e}"


def emit_csv(curve: SliceCurve, destination, metadata: Optional[dict] = None) -> str:
    """Write one curve; flagged samples get an empty g2 and ``flag=dark``.

    Returns the path written.
    """
    meta = "; ".join(f"{k}={v}" for k, v in (metadata or {}).items())
    lines = [f"# {meta}", CSV_HEADER]
    oracle = curve.oracle if curve.oracle is not None else np.full(curve.coords.shape, np.nan)
    for x, g, s, o, f in zip(curve.coords, curve.g2, curve.stderr, oracle, curve.flags):
        dark = bool(f) or not math.isfinite(g)
        lines.append(",".join([f"{x:.16e}", "" if dark else _num(g), "" if dark else _num(s),
                               _num(o), "dark" if dark else "ok"]))
    path = os.fspath(destination)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def read_csv(path) -> tuple:
    """``(metadata, columns)`` with empty cells read back as NaN."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        header = fh.readline().strip().split(",")
        rows = [ln.rstrip("\n").split(",") for ln in fh if ln.strip()]
    meta = {}
    for part in first.lstrip("# ").strip().split("; "):
        if "=" in part:
            k, v = part.split("=", 1)
            meta[k] = v
    cols = {}
    for c, name in enumerate(header):
        if name == "flag":
            cols[name] = [r[c] for r in rows]
        else:
            cols[name] = np.array([float(r[c]) if r[c] else np.nan for r in rows])
    return meta, cols


def emit_plot(slices: Sequence[SliceCurve], destination, *, title: str = "",
              xlabel: str = "position (mm)", scale: float = 1e3,
              xlim: Optional[tuple] = None) -> str:
    """SVG of Monte Carlo points with error bars and oracle lines."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if not slices:
        raise ValueError("need at least one curve to plot")
    matplotlib.rcParams["svg.hashsalt"] = "ghostfringe"
    fig, ax = plt.subplots(figsize=(7, 4))
    lo, hi = math.inf, -math.inf
    for k, c in enumerate(slices):
        sel = ~np.asarray(c.flags, bool) & np.isfinite(c.g2)
        if xlim is not None:
            sel &= (c.coords * scale >= xlim[0]) & (c.coords * scale <= xlim[1])
        x = c.coords[sel] * scale
        y = c.g2[sel]
        err = np.where(np.isfinite(c.stderr[sel]), c.stderr[sel], 0.0)
        color = f"C{k}"
        ax.errorbar(x, y, yerr=err, fmt="o", ms=2.5, lw=0.6, color=color, alpha=0.7,
                    label=f"{c.label} Monte Carlo" if c.label else "Monte Carlo")
        if y.size:
            lo, hi = min(lo, float(np.min(y - err))), max(hi, float(np.max(y + err)))
        if c.oracle is not None:
            osel = np.isfinite(c.oracle)
            if xlim is not None:
                osel &= (c.coords * scale >= xlim[0]) & (c.coords * scale <= xlim[1])
            ax.plot(c.coords[osel] * scale, c.oracle[osel], "-", color=color, lw=1.2,
                    label=f"{c.label} oracle" if c.label else "oracle")
            if osel.any():
                lo = min(lo, float(np.min(c.oracle[osel])))
                hi = max(hi, float(np.max(c.oracle[osel])))
    if not math.isfinite(lo):
        lo, hi = 0.0, 1.0
    pad = max(0.05 * (hi - lo), 0.02 * max(abs(hi), 1.0))
    ax.set_ylim(lo - pad, hi + pad)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("normalized correlation g2 (dimensionless)")
    if title:
        ax.set_title(title)
    if len(slices) > 1 or any(c.oracle is not None for c in slices):
        ax.legend(fontsize=8)
    fig.tight_layout()
    path = os.fspath(destination)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


@dataclass
class MetricLine:
    """One reported quantity with its uncertainty, target and verdict.

    ``verdict`` is PASS/FAIL for declared checks, AGREE/DISAGREE for
    comparisons against published values and INFO otherwise.
    """

    pairing: str
    name: str
    value: float
    uncertainty: float
    expected: Optional[float] = None
    tolerance: Optional[float] = None
    verdict: str = "INFO"
    note: str = ""

    def format(self) -> str:
        def f(v):
            if v is None:
                return "n/a"
            if isinstance(v, bool):
                return str(v).lower()
            return "nan" if not math.isfinite(v) else f"{v:.6g}"
        text = (f"pairing={self.pairing} metric={self.name} value={f(self.value)} "
                f"uncertainty={f(self.uncertainty)} expected={f(self.expected)} "
                f"tolerance={f(self.tolerance)} verdict={self.verdict}")
        return text + (f" note=\"{self.note}\"" if self.note else "")


@dataclass
class RunReport:
    command: str
    config_text: str
    config_hash: str
    seed: Optional[int]
    metrics: list = field(default_factory=list)
    files: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def checks(self) -> list:
        return [m for m in self.metrics if m.verdict in ("PASS", "FAIL")]

    @property
    def passed(self) -> bool:
        return all(m.verdict == "PASS" for m in self.checks)

    def add(self, *args, **kw) -> MetricLine:
        line = MetricLine(*args, **kw)
        self.metrics.append(line)
        return line

    def summary(self) -> str:
        out = [f"command={self.command} config_hash={self.config_hash} seed={self.seed}"]
        out += [m.format() for m in self.metrics]
        out += [f"note: {n}" for n in self.notes]
        n_fail = sum(m.verdict == "FAIL" for m in self.checks)
        out.append(f"checks={len(self.checks)} failed={n_fail} "
                   f"overall={'PASS' if self.passed else 'FAIL'}")
        return "\n".join(out)

    def to_json(self) -> str:
        def clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return None
            return v
        doc = {
            "schema": "ghostfringe.run-report/1",
            "command": self.command,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "config": self.config_text,
            "metrics": [{k: clean(v) for k, v in asdict(m).items()} for m in self.metrics],
            "files": self.files,
            "notes": self.notes,
            "passed": self.passed,
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    def write(self, out_dir) -> dict:
        os.makedirs(out_dir, exist_ok=True)
        paths = {"json": os.path.join(out_dir, "report.json"),
                 "summary": os.path.join(out_dir, "summary.txt")}
        with open(paths["json"], "w", encoding="utf-8") as fh:
            fh.write(self.to_json() + "\n")
        with open(paths["summary"], "w", encoding="utf-8") as fh:
            fh.write(self.summary() + "\n")
        return paths
