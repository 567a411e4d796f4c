"""Numpy fallback for the compiled kernels, with identical summation order."""
from __future__ import annotations

import numpy as np

_TILE = 64


def outer_accumulate(P, Xr, Xi, e1r, e1i, i1, e2r, e2i, i2):
    m, n1 = e1r.shape
    for s in range(0, n1, _TILE):
        sl = slice(s, s + _TILE)
        p, xr, xi = P[sl], Xr[sl], Xi[sl]
        for r in range(m):
            a, b = e1r[r, sl], e1i[r, sl]
            c, d = e2r[r], e2i[r]
            p += np.multiply.outer(i1[r, sl], i2[r])
            xr += np.multiply.outer(a, c) + np.multiply.outer(b, d)
            xi += np.multiply.outer(a, d) - np.multiply.outer(b, c)


def diagonal_sums(P):
    n1, n2 = P.shape
    out = np.zeros(n1 + n2 - 1)
    for i in range(n1):
        out[i:i + n2] += P[i, ::-1]
    return out
