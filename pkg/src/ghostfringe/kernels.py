"""Hot-loop kernels: compiled extension when available, numpy otherwise.

Set ``GHOSTFRINGE_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os
import warnings

import numpy as np

from . import _pykernels

__all__ = ["BACKEND", "outer_accumulate", "diagonal_sums", "get_backend"]

_py = _pykernels
_c = None
if os.environ.get("GHOSTFRINGE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _c
    except ImportError as exc:  # pragma: no cover - depends on the build
        warnings.warn(f"compiled kernels unavailable ({exc}); using the numpy fallback",
                      RuntimeWarning, stacklevel=2)
        _c = None

BACKEND = "cython" if _c is not None else "python"


def get_backend(name: str = None):
    """Kernel module by name (``"cython"`` or ``"python"``); default is the active one."""
    name = name or BACKEND
    if name == "cython":
        if _c is None:
            raise ImportError("compiled kernels are not built")
        return _c
    if name == "python":
        return _py
    raise ValueError(f"unknown backend {name!r}")


def _split(e):
    e = np.ascontiguousarray(e, dtype=np.complex128)
    re = np.ascontiguousarray(e.real)
    im = np.ascontiguousarray(e.imag)
    return re, im, re * re + im * im


def outer_accumulate(P, Xr, Xi, E1, E2, backend: str = None):
    """Accumulate a block of field pairs (rows are realizations) into the surfaces."""
    e1r, e1i, i1 = _split(E1)
    e2r, e2i, i2 = _split(E2)
    get_backend(backend).outer_accumulate(P, Xr, Xi, e1r, e1i, i1, e2r, e2i, i2)


def diagonal_sums(P, backend: str = None):
    return get_backend(backend).diagonal_sums(np.ascontiguousarray(P, dtype=float))
