# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled accumulation kernels.

Summation order matches the numpy fallback element for element (realizations
in ascending order, no fused multiply-add), so both backends agree bitwise.
"""
import numpy as np


def outer_accumulate(double[:, ::1] P, double[:, ::1] Xr, double[:, ::1] Xi,
                     const double[:, ::1] e1r, const double[:, ::1] e1i, const double[:, ::1] i1,
                     const double[:, ::1] e2r, const double[:, ::1] e2i, const double[:, ::1] i2):
    """Add ``sum_r I1[r,i] I2[r,j]`` to P and ``sum_r conj(E1[r,i]) E2[r,j]`` to (Xr, Xi)."""
    cdef Py_ssize_t m = e1r.shape[0], n1 = e1r.shape[1], n2 = e2r.shape[1]
    cdef Py_ssize_t i, j, r
    cdef double a, b, p
    cdef double *prow
    cdef double *xrrow
    cdef double *xirow
    cdef const double *cr
    cdef const double *ci
    cdef const double *ir
    with nogil:
        for i in range(n1):
            prow = &P[i, 0]
            xrrow = &Xr[i, 0]
            xirow = &Xi[i, 0]
            for r in range(m):
                a = e1r[r, i]
                b = e1i[r, i]
                p = i1[r, i]
                cr = &e2r[r, 0]
                ci = &e2i[r, 0]
                ir = &i2[r, 0]
                for j in range(n2):
                    prow[j] = prow[j] + p * ir[j]
                    xrrow[j] = xrrow[j] + (a * cr[j] + b * ci[j])
                    xirow[j] = xirow[j] + (a * ci[j] - b * cr[j])


def diagonal_sums(const double[:, ::1] P):
    """Sums along the diagonals ``i - j = const``; entry ``i - j + n2 - 1``."""
    cdef Py_ssize_t n1 = P.shape[0], n2 = P.shape[1]
    out = np.zeros(n1 + n2 - 1)
    cdef double[::1] o = out
    cdef Py_ssize_t i, j, base
    with nogil:
        for i in range(n1):
            base = i + n2 - 1
            for j in range(n2):
                o[base - j] = o[base - j] + P[i, j]
    return out
