"""Kernel selection: compiled extension when available, numpy fallback otherwise.

`eval_fourier_spline(breaks, coeffs, rq, tq)` evaluates a real field given as
theta-Fourier coefficients (modes 0..K) with radial cubic-spline pieces, at
scattered (r, theta) points.  Both implementations produce identical results
to rounding; `benchmarks/bench_kernels.py` compares their throughput.
"""

try:
    from ._sl_kernel import eval_fourier_spline as _compiled_eval

    HAVE_COMPILED = True
except ImportError:  # pragma: no cover - depends on build environment
    _compiled_eval = None
    HAVE_COMPILED = False

from ._sl_numpy import eval_fourier_spline as _numpy_eval

import numpy as np


def eval_fourier_spline(breaks, coeffs, rq, tq, force_numpy=False):
    breaks = np.ascontiguousarray(breaks, dtype=np.float64)
    coeffs = np.ascontiguousarray(coeffs, dtype=np.complex128)
    rq = np.ascontiguousarray(rq, dtype=np.float64)
    tq = np.ascontiguousarray(tq, dtype=np.float64)
    if HAVE_COMPILED and not force_numpy:
        return _compiled_eval(breaks, coeffs, rq, tq)
    return _numpy_eval(breaks, coeffs, rq, tq)
