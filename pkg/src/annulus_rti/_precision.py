"""Extended-precision polish of dispersion eigenpairs for mode construction.

The mode quadruple needs third derivatives of the eigenfunction near the
walls, where Chebyshev mode k contributes O(k^6); double-precision eigenpairs
carry coefficient noise that those weights amplify beyond the residual
targets.  This module re-assembles the quadratic forms in numpy longdouble
from the exact polynomial representation of the trial basis, runs a few
inverse-iteration + Newton steps on the equilibrated pencil, and evaluates
the whole construction chain in longdouble before downcasting.

Everything here is internal; build_mode decides when to use it.
"""

from __future__ import annotations

import numpy as np
import numpy.polynomial.chebyshev as cheb

from .profiles import eval_profile
from .radial import coeff_valley_cutoff

_LD = np.longdouble


def _cc_weights(n, dtype):
    N = n - 1
    theta = np.pi * np.arange(n, dtype=dtype) / N
    w = np.zeros(n, dtype=dtype)
    ii = np.arange(1, N)
    v = np.ones(N - 1, dtype=dtype)
    if N % 2 == 0:
        w[0] = w[N] = dtype(1.0) / (N**2 - 1)
        for m in range(1, N // 2):
            v -= 2.0 * np.cos(2 * m * theta[ii]) / dtype(4 * m**2 - 1)
        v -= np.cos(N * theta[ii]) / dtype(N**2 - 1)
    else:
        w[0] = w[N] = dtype(1.0) / N**2
        for m in range(1, (N - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * m * theta[ii]) / dtype(4 * m**2 - 1)
    w[ii] = 2.0 * v / N
    return w


def _xmul(coeffs):
    """Multiply a coefficient column stack by x: x T_k = (T_{k+1}+T_{|k-1|})/2."""
    m, ncol = coeffs.shape
    out = np.zeros((m + 1, ncol), dtype=coeffs.dtype)
    out[1] += coeffs[0]
    out[2 : m + 1] += 0.5 * coeffs[1:]
    out[0 : m - 1] += 0.5 * coeffs[1:]
    return out


def _lu_factor(A):
    A = A.copy()
    m = A.shape[0]
    piv = np.zeros(m, dtype=int)
    for i in range(m - 1):
        p = i + int(np.argmax(np.abs(A[i:, i])))
        piv[i] = p
        if p != i:
            A[[i, p]] = A[[p, i]]
        A[i + 1 :, i] /= A[i, i]
        A[i + 1 :, i + 1 :] -= np.outer(A[i + 1 :, i], A[i, i + 1 :])
    piv[m - 1] = m - 1
    return A, piv


def _lu_solve(fac, b):
    A, piv = fac
    m = A.shape[0]
    x = b.copy()
    for i in range(m - 1):
        if piv[i] != i:
            x[[i, piv[i]]] = x[[piv[i], i]]
    for i in range(m - 1):
        x[i + 1 :] -= A[i + 1 :, i] * x[i]
    for i in range(m - 1, -1, -1):
        x[i] = (x[i] - A[i, i + 1 :] @ x[i + 1 :]) / A[i, i]
    return x


def refined_quadruple(space, steady, point, iterations=3):
    """Longdouble (lambda0, w1, w2, h1, h2) for a dispersion point.

    Returns a dict of float64 arrays whose values were produced entirely in
    extended precision from the exact polynomial representation of the
    eigenfunction.
    """
    grid = space.grid
    n = grid.n
    params = steady.params
    kk = _LD(point.k)
    xi2 = kk * kk
    mu = _LD(params.mu)
    g = _LD(params.g)

    jj = np.arange(n, dtype=_LD)
    x = -np.cos(np.pi * jj / (n - 1))
    half = (_LD(grid.R2) - _LD(grid.R1)) / 2
    mid = (_LD(grid.R1) + _LD(grid.R2)) / 2
    r = mid + half * x
    w = _cc_weights(n, _LD) * half
    scale = 1.0 / half
    rho, drho, _ = eval_profile(steady.profile, r)
    rho = np.asarray(rho, dtype=_LD)
    drho = np.asarray(drho, dtype=_LD)

    # raw graded recombination columns are exact in extended precision; the
    # orthonormalized basis would inject its double-precision QR noise
    m = n - 3
    Qc = np.zeros((n, m), dtype=_LD)
    js = np.arange(m)
    frac = js.astype(_LD) + 1.0
    frac /= js + 2.0
    Qc[js, js] = 1.0
    Qc[js + 1, js] = -frac
    Qc[js + 2, js] = -1.0
    Qc[js + 3, js] = frac
    rQc = mid * np.vstack([Qc, np.zeros((1, Qc.shape[1]), dtype=_LD)]) + half * _xmul(Qc)

    def values(coeffs):
        return cheb.chebval(x, coeffs).T

    B = values(Qc)
    DB = values(cheb.chebder(Qc, 1, axis=0)) * scale
    A1 = values(cheb.chebder(rQc, 1, axis=0)) * scale
    A2 = values(cheb.chebder(rQc, 2, axis=0)) * scale**2

    M1 = xi2 * (B.T * (w * r * rho)) @ B + (A1.T * (w * r * rho)) @ A1
    M2 = (
        (2.0 * xi2 + 1.0) * (DB.T * (w * r)) @ DB
        + (xi2 - 1.0) ** 2 * (B.T * (w / r)) @ B
        + (A2.T * (w * r)) @ A2
        + _LD(params.slip_weight) * np.outer(A1[0], A1[0])
    )
    M3 = -xi2 * g * (B.T * (w * r * drho)) @ B
    M1 = 0.5 * (M1 + M1.T)
    M2 = 0.5 * (M2 + M2.T)
    M3 = 0.5 * (M3 + M3.T)

    from scipy.linalg import solve_triangular

    s = _LD(point.lambda0)
    # map the orthonormal-basis coordinates into raw graded coordinates; the
    # double-precision R only seeds the iteration
    c = solve_triangular(space.graded_R, point.coords).astype(_LD)
    c /= np.sqrt(c @ (M1 @ c))
    for _ in range(iterations):
        A = mu * s * M2 + M3
        d = np.sqrt(np.abs(np.diag(A)) + np.abs(np.diag(M1)))
        S = 1.0 / d
        Ah = A * S[:, None] * S[None, :]
        Bh = M1 * S[:, None] * S[None, :]
        ch = c / S
        ch /= np.sqrt(ch @ (Bh @ ch))
        theta = ch @ (Ah @ ch)
        sigma = theta - np.abs(theta) * _LD(1e-10)
        fac = _lu_factor(Ah - sigma * Bh)
        y = _lu_solve(fac, Bh @ ch)
        ch = y / np.sqrt(y @ (Bh @ y))
        theta = ch @ (Ah @ ch)
        c = ch * S
        dtheta = mu * (c @ (M2 @ c)) / (c @ (M1 @ c))
        s = s - (s * s + theta) / (2 * s + dtheta)

    Wv = B @ c
    if Wv[np.argmax(np.abs(Wv))] < 0:
        c = -c

    Wc = Qc @ c  # exact polynomial coefficients of the eigenfunction
    uc = rQc @ c
    # the eigenproblem does not constrain coordinates whose bending energy is
    # below the solve's noise floor; drop everything past the decay valley
    # (order-3 weighting, the highest derivative taken below)
    cut = coeff_valley_cutoff(np.abs(uc).astype(float), order=3)
    Wc[cut:] = 0.0
    uc[cut:] = 0.0
    W = cheb.chebval(x, Wc)
    du = [cheb.chebval(x, cheb.chebder(uc, m)) * scale**m for m in (1, 2, 3)]
    w2 = -du[0] / kk
    dw2 = -du[1] / kk
    d2w2 = -du[2] / kk
    visc = mu * (d2w2 + dw2 / r - (xi2 + 1.0) * w2 / r**2) - s * rho * w2
    h1 = (r / kk) * (2.0 * mu * kk * W / r**2 - visc)
    h2 = -W * drho / s
    return {
        "lambda0": float(s),
        "w1": W.astype(float),
        "w2": w2.astype(float),
        "h1": h1.astype(float),
        "h2": h2.astype(float),
    }
