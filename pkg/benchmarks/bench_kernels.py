"""Compiled vs numpy kernels: timing and bitwise agreement.

Usage::

    python3 benchmarks/bench_kernels.py [--n 512 1024 2048] [--block 100] [--repeat 3]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from ghostfringe import kernels


def _fields(m: int, n: int, seed: int):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))


def _time(fn, repeat: int) -> float:
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def bench_outer(n: int, block: int, repeat: int) -> dict:
    e1, e2 = _fields(block, n, 1), _fields(block, n, 2)
    out, surf = {}, {}
    for name in ("cython", "python"):
        try:
            kernels.get_backend(name)
        except ImportError:
            continue
        def run(name=name):
            s = [np.zeros((n, n)) for _ in range(3)]
            kernels.outer_accumulate(*s, e1, e2, backend=name)
            surf[name] = s
        out[name] = _time(run, repeat)
    if len(surf) == 2:
        out["identical"] = all(np.array_equal(a, b) for a, b in zip(surf["cython"], surf["python"]))
    return out


def bench_diag(n: int, repeat: int) -> dict:
    p = np.random.default_rng(3).standard_normal((n, n))
    out, res = {}, {}
    for name in ("cython", "python"):
        try:
            kernels.get_backend(name)
        except ImportError:
            continue
        out[name] = _time(lambda name=name: res.__setitem__(
            name, kernels.diagonal_sums(p, backend=name)), repeat)
    if len(res) == 2:
        out["identical"] = bool(np.array_equal(res["cython"], res["python"]))
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[256, 512, 1024])
    ap.add_argument("--block", type=int, default=100, help="realizations per accumulate call")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    print(f"active backend: {kernels.BACKEND}")
    print(f"{'kernel':<18}{'n':>6}{'cython s':>12}{'numpy s':>12}{'speedup':>10}  identical")
    for n in args.n:
        for label, r in (("outer_accumulate", bench_outer(n, args.block, args.repeat)),
                         ("diagonal_sums", bench_diag(n, args.repeat))):
            c, p = r.get("cython", np.nan), r.get("python", np.nan)
            print(f"{label:<18}{n:>6}{c:>12.4f}{p:>12.4f}{p / c:>10.2f}  {r.get('identical', 'n/a')}")


if __name__ == "__main__":
    main()
