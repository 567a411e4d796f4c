"""Command line: ``ghostfringe run`` and ``ghostfringe compare``.

Exit status: 0 when all declared checks pass (or ``run`` without
``--check``), 1 when a check fails, 2 on configuration or runtime errors.
"""
from __future__ import annotations

import argparse
import os
import sys
import time
from typing import Optional, Sequence

from .analysis import analyze_run, compare_report
from .config import emit_config, load_config
from .errors import GhostFringeError
from .scenario import build_plan, run_plan

__all__ = ["main", "cmd_run", "cmd_compare", "build_parser"]

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


def cmd_run(config_path: str, workers: int = 1, seed: Optional[int] = None,
            out_dir: str = "ghostfringe-out", oracle_stride: Optional[int] = None):
    """Run the ensemble described by ``config_path`` and write all outputs to ``out_dir``."""
    cfg = load_config(config_path)
    if seed is not None:
        cfg = cfg.with_seed(seed)
    os.makedirs(out_dir, exist_ok=True)
    text = emit_config(cfg)
    with open(os.path.join(out_dir, "config.ini"), "w", encoding="utf-8") as fh:
        fh.write(text)
    results = run_plan(build_plan(cfg), cfg, workers=workers)
    return analyze_run(cfg, results, text, out_dir, oracle_stride=oracle_stride)


def cmd_compare(config_path: str, out_dir: str = "ghostfringe-compare", finite: bool = True):
    """Oracle-only comparison for ``config_path``; no Monte Carlo."""
    cfg = load_config(config_path)
    return compare_report(cfg, emit_config(cfg), out_dir, finite=finite)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ghostfringe",
        description="Two-arm intensity-correlation simulations with pseudothermal speckle.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a Monte Carlo ensemble and report its fringe metrics")
    run.add_argument("config", help="scenario configuration file")
    run.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")
    run.add_argument("--seed", type=int, default=None, help="override the master seed")
    run.add_argument("--out", default="ghostfringe-out", help="output directory")
    run.add_argument("--check", action="store_true",
                     help="exit non-zero when a declared acceptance check fails")
    cmp_ = sub.add_parser("compare", help="evaluate the analytic and quadrature oracles only")
    cmp_.add_argument("config", help="scenario configuration file")
    cmp_.add_argument("--out", default="ghostfringe-compare", help="output directory")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        if args.command == "run":
            if args.workers < 1:
                raise GhostFringeError("--workers must be at least 1")
            report = cmd_run(args.config, args.workers, args.seed, args.out)
        else:
            report = cmd_compare(args.config, args.out)
    except (GhostFringeError, OSError) as exc:
        print(f"ghostfringe {args.command}: {args.config}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(report.summary())
    print(f"wrote {len(report.files)} files to {args.out} "
          f"in {time.perf_counter() - start:.1f} s")
    if args.command == "compare" or args.check:
        return EXIT_OK if report.passed else EXIT_FAIL
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
