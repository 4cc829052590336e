# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops for one-hot MLP training.

Every kernel mirrors ``groklab._kernels_py`` operation for operation so the two
backends produce bit-identical floats. Build with ``-ffp-contract=off``; a fused
multiply-add would break that equivalence.
"""
import numpy as np

from libc.math cimport fabs
from libc.stdint cimport int64_t

cdef enum:
    POLYNOMIAL = 0
    CUBIC = 1
    ABS_CUBIC = 2
    SIGNED_SQUARE = 3


cdef inline double _value(double z, int kind, double b, double a) noexcept nogil:
    cdef double az
    if kind == POLYNOMIAL:
        return b * z + a * (z * z)
    elif kind == CUBIC:
        return (z * z) * z
    elif kind == ABS_CUBIC:
        az = fabs(z)
        return (az * az) * az
    else:
        return z * fabs(z)


cdef inline double _slope(double z, int kind, double b, double a) noexcept nogil:
    if kind == POLYNOMIAL:
        return b + (2.0 * a) * z
    elif kind == CUBIC:
        return 3.0 * (z * z)
    elif kind == ABS_CUBIC:
        return (3.0 * z) * fabs(z)
    else:
        return 2.0 * fabs(z)


def onehot_hidden(const double[:, ::1] wt, const int64_t[::1] i_idx,
                  const int64_t[::1] j_idx, Py_ssize_t p, int kind,
                  double b, double a, bint with_slope=True):
    """Return ``(phi(z), phi'(z))`` with ``z[s] = wt[i[s]] + wt[p + j[s]]``.

    ``wt`` is the transposed first-layer matrix, shape ``(2p, width)``.
    The slope array is ``None`` when ``with_slope`` is false.
    """
    cdef Py_ssize_t n = i_idx.shape[0]
    cdef Py_ssize_t width = wt.shape[1]
    cdef Py_ssize_t s, c, ri, rj
    cdef double z
    h_arr = np.empty((n, width), dtype=np.float64)
    cdef double[:, ::1] h = h_arr
    cdef double[:, ::1] d
    if with_slope:
        d_arr = np.empty((n, width), dtype=np.float64)
        d = d_arr
    else:
        d_arr = None
    with nogil:
        for s in range(n):
            ri = i_idx[s]
            rj = p + j_idx[s]
            for c in range(width):
                z = wt[ri, c] + wt[rj, c]
                h[s, c] = _value(z, kind, b, a)
                if with_slope:
                    d[s, c] = _slope(z, kind, b, a)
    return h_arr, d_arr


def onehot_scatter(const double[:, ::1] gz, const int64_t[::1] i_idx,
                   const int64_t[::1] j_idx, Py_ssize_t p):
    """Accumulate row gradients into the transposed first-layer gradient.

    Rows are added in sample order, which fixes the summation order.
    """
    cdef Py_ssize_t n = gz.shape[0]
    cdef Py_ssize_t width = gz.shape[1]
    cdef Py_ssize_t s, c, ri, rj
    out_arr = np.zeros((2 * p, width), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    with nogil:
        for s in range(n):
            ri = i_idx[s]
            rj = p + j_idx[s]
            for c in range(width):
                out[ri, c] += gz[s, c]
                out[rj, c] += gz[s, c]
    return out_arr


def activate(const double[:, ::1] z, int kind, double b, double a,
             bint with_slope=True):
    """Elementwise activation (and slope) of a dense pre-activation matrix."""
    cdef Py_ssize_t n = z.shape[0]
    cdef Py_ssize_t width = z.shape[1]
    cdef Py_ssize_t s, c
    cdef double v
    h_arr = np.empty((n, width), dtype=np.float64)
    cdef double[:, ::1] h = h_arr
    cdef double[:, ::1] d
    if with_slope:
        d_arr = np.empty((n, width), dtype=np.float64)
        d = d_arr
    else:
        d_arr = None
    with nogil:
        for s in range(n):
            for c in range(width):
                v = z[s, c]
                h[s, c] = _value(v, kind, b, a)
                if with_slope:
                    d[s, c] = _slope(v, kind, b, a)
    return h_arr, d_arr
