"""Pure-numpy fallback for the semi-Lagrangian interpolation kernel.

Same contract as the compiled version in _sl_kernel.pyx; vectorized over the
query points instead of looping.
"""

import numpy as np


def eval_fourier_spline(breaks, coeffs, rq, tq):
    """Real field values at points (rq, tq).

    breaks: ascending radial knots, length n
    coeffs: (K+1, 4, n-1) complex piecewise-cubic coefficients per mode,
            highest power first (scipy PPoly layout, local variable r - knot)
    """
    breaks = np.asarray(breaks)
    rq = np.asarray(rq)
    tq = np.asarray(tq)
    nint = coeffs.shape[2]
    idx = np.clip(np.searchsorted(breaks, rq, side="right") - 1, 0, nint - 1)
    dx = rq - breaks[idx]
    local = coeffs[:, :, idx]  # (K+1, 4, m)
    vals = ((local[:, 0] * dx + local[:, 1]) * dx + local[:, 2]) * dx + local[:, 3]
    nmodes = coeffs.shape[0]
    out = vals[0].real.copy()
    if nmodes > 1:
        ks = np.arange(1, nmodes)
        phases = np.exp(1j * ks[:, None] * tq[None, :])
        out += 2.0 * np.real(np.einsum("km,km->m", vals[1:], phases))
    return out
