# cython: boundscheck=False, wraparound=False, cdivision=True
"""Scattered-point evaluation of a theta-Fourier x radial-cubic-spline field.

Hot kernel of the semi-Lagrangian transport step: for every departure point
(r_q, theta_q) it locates the spline interval, evaluates the K+1 complex
piecewise cubics and sums the real part of the Fourier series with a
sine/cosine recurrence.  A pure-numpy twin lives in _sl_numpy.py.
"""

import numpy as np

cimport cython
from libc.math cimport cos, sin


def eval_fourier_spline(double[::1] breaks,
                        double complex[:, :, ::1] coeffs,
                        double[::1] rq,
                        double[::1] tq):
    """Real field values at points (rq, tq).

    breaks: ascending radial knots, length n
    coeffs: (K+1, 4, n-1) complex piecewise-cubic coefficients per mode,
            highest power first (scipy PPoly layout, local variable r - knot)
    """
    cdef Py_ssize_t npts = rq.shape[0]
    cdef Py_ssize_t nmodes = coeffs.shape[0]
    cdef Py_ssize_t nint = coeffs.shape[2]
    cdef Py_ssize_t n = breaks.shape[0]
    out_arr = np.empty(npts, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t p, k, lo, hi, mid
    cdef double r, th, dx, val, ck, sk, c1, s1, tmp
    cdef double complex z

    for p in range(npts):
        r = rq[p]
        # binary search: largest interval index with breaks[lo] <= r
        lo = 0
        hi = n - 1
        while hi - lo > 1:
            mid = (lo + hi) >> 1
            if breaks[mid] <= r:
                lo = mid
            else:
                hi = mid
        if lo > nint - 1:
            lo = nint - 1
        dx = r - breaks[lo]
        th = tq[p]
        c1 = cos(th)
        s1 = sin(th)

        z = ((coeffs[0, 0, lo] * dx + coeffs[0, 1, lo]) * dx + coeffs[0, 2, lo]) * dx \
            + coeffs[0, 3, lo]
        val = z.real
        ck = 1.0
        sk = 0.0
        for k in range(1, nmodes):
            tmp = ck * c1 - sk * s1
            sk = sk * c1 + ck * s1
            ck = tmp
            z = ((coeffs[k, 0, lo] * dx + coeffs[k, 1, lo]) * dx + coeffs[k, 2, lo]) * dx \
                + coeffs[k, 3, lo]
            val += 2.0 * (z.real * ck - z.imag * sk)
        out[p] = val
    return out_arr
