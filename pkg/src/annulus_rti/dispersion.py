"""Growth-rate dispersion solver on the annulus.

For each wavenumber xi the radial eigenvalue problem is reduced to three
quadratic forms on the constrained trial space:

    E1(xi, W) = int [ xi^2 r rho W^2 + r rho |D(rW)|^2 ] dr
    E2(xi, W) = int [ r (2 xi^2 + 1) |DW|^2 + (xi^2-1)^2 W^2 / r
                      + r |D^2(rW)|^2 ] dr
                + (1 - alpha R1 / mu) |D(rW)|^2 at r = R1
    E3(xi, W) = - xi^2 g int r W^2 Drho dr

Phi(s, xi) = min (mu s E2 + E3)/E1 is evaluated as the smallest eigenvalue of
the symmetric-definite pencil (mu s M2 + M3, M1); the growth rate lambda0(xi)
is the unique root of f(s) = s^2 + Phi(s, xi) in (0, lambda_c(xi)], found by
bracketing bisection (f is increasing in s).

A separate two-dimensional quotient over (v_r, v_theta, h) provides the
maximum linear growth rate; see max_growth_2d.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import (
    EigenFailure,
    InvalidWavenumber,
    MaxIterations,
    NoBracket,
    NonSPD,
)
from .profiles import eval_profile

DEFAULT_ROOT_TOL = 1e-10
DEFAULT_KMAX = 32


@dataclass
class QuadraticForms:
    """Symmetric matrices realizing E1, E2, E3 in trial-space coordinates."""

    xi: float
    M1: np.ndarray
    M2: np.ndarray
    M3: np.ndarray
    space: "object" = field(repr=False, default=None)
    steady: "object" = field(repr=False, default=None)


@dataclass
class DispersionPoint:
    """Result of the growth-rate solve at one integer wavenumber."""

    k: int
    lambda0: float | None
    lambda_c: float
    lambda_upper: float
    W: np.ndarray | None = field(repr=False, default=None)
    iterations: int = 0
    phi_at_lambda0: float = np.nan
    error: str | None = None
    coords: np.ndarray | None = field(repr=False, default=None)
    space: "object" = field(repr=False, default=None)

    @property
    def stable(self):
        return self.lambda0 is None


@dataclass
class DispersionCurve:
    points: list
    LambdaTilde: float | None
    argmax_k: int | None


def _sym_eigh(A, B, want_vectors=False):
    """Symmetric-definite eigensolve with diagonal equilibration.

    Congruence by S = diag(1/sqrt(|A_ii| + B_ii)) leaves the eigenvalues
    untouched but keeps the backward error of the reduction proportional to
    each coordinate's own energy; with a degree-graded basis this is what
    makes the high-order coefficients of eigenvectors trustworthy.
    """
    A = 0.5 * (A + A.T)
    d = np.sqrt(np.abs(np.diag(A)) + np.abs(np.diag(B)))
    d[d < 1e-150] = 1.0
    S = 1.0 / d
    As = A * S[:, None] * S[None, :]
    Bs = B * S[:, None] * S[None, :]
    try:
        if want_vectors:
            vals, vecs = sla.eigh(As, Bs)
            return vals, vecs * S[:, None]
        return sla.eigh(As, Bs, eigvals_only=True)
    except sla.LinAlgError as exc:  # pragma: no cover - rare LAPACK failure
        raise EigenFailure(str(exc)) from exc


def _xmul_matrix(n):
    """Coefficient-space multiplication by x: x T_k = (T_{k+1} + T_{|k-1|})/2."""
    X = np.zeros((n + 1, n))
    X[1, 0] = 1.0
    for k in range(1, n):
        X[k + 1, k] += 0.5
        X[k - 1, k] += 0.5
    return X


def basis_derivative_values(space):
    """Nodal values of W, DW, D(rW), D^2(rW) for every basis column.

    On chebyshev grids these come from exact coefficient-space operations
    (banded multiplication by r, derivative recurrences) evaluated through the
    Chebyshev Vandermonde matrix, whose entries are bounded by 1; dense
    differentiation matrices would inject O(eps n^4) noise into D^2 values.
    Cached on the TrialSpace.
    """
    cache = getattr(space, "_value_cache", None)
    if cache is not None:
        return cache
    grid = space.grid
    B = space.basis
    if space.coeff_basis is None:
        r = grid.nodes[:, None]
        cache = {
            "B": B,
            "DB": grid.D1 @ B,
            "A1": grid.D1 @ (r * B),
            "A2": grid.D2 @ (r * B),
        }
    else:
        n = grid.n
        cheb = np.polynomial.chebyshev
        x = cheb.chebpts2(n)
        V = cheb.chebvander(x, n + 1)  # room for the r-raised degree
        scale = 2.0 / (grid.R2 - grid.R1)
        Qc = space.coeff_basis
        mid = 0.5 * (grid.R1 + grid.R2)
        half = 0.5 * (grid.R2 - grid.R1)
        rQc = mid * np.vstack([Qc, np.zeros((1, Qc.shape[1]))]) + half * (_xmul_matrix(n) @ Qc)
        dQc = cheb.chebder(Qc, 1, axis=0) * scale
        d1r = cheb.chebder(rQc, 1, axis=0) * scale
        d2r = cheb.chebder(rQc, 2, axis=0) * scale**2
        cache = {
            "B": B,
            "DB": V[:, : dQc.shape[0]] @ dQc,
            "A1": V[:, : d1r.shape[0]] @ d1r,
            "A2": V[:, : d2r.shape[0]] @ d2r,
        }
    space._value_cache = cache
    return cache


def assemble_forms(space, steady, xi):
    """Assemble M1, M2, M3 on the trial space for wavenumber xi (real, != 0)."""
    if xi == 0:
        raise InvalidWavenumber("xi must be nonzero")
    grid = space.grid
    params = steady.params
    r = grid.nodes
    w = grid.w
    rho, drho, _ = eval_profile(steady.profile, r)
    rho = np.asarray(rho)
    drho = np.asarray(drho)
    xi2 = float(xi) ** 2

    vals = basis_derivative_values(space)
    B, DB, A1, A2 = vals["B"], vals["DB"], vals["A1"], vals["A2"]

    M1 = xi2 * (B.T * (w * r * rho)) @ B + (A1.T * (w * r * rho)) @ A1
    M2 = (
        (2.0 * xi2 + 1.0) * (DB.T * (w * r)) @ DB
        + (xi2 - 1.0) ** 2 * (B.T * (w / r)) @ B
        + (A2.T * (w * r)) @ A2
        + params.slip_weight * np.outer(A1[0], A1[0])
    )
    M3 = -xi2 * params.g * (B.T * (w * r * drho)) @ B

    M1 = 0.5 * (M1 + M1.T)
    M2 = 0.5 * (M2 + M2.T)
    M3 = 0.5 * (M3 + M3.T)
    try:
        sla.cholesky(M1)
    except sla.LinAlgError as exc:
        raise NonSPD("E1 mass matrix is not positive definite") from exc
    return QuadraticForms(xi=float(xi), M1=M1, M2=M2, M3=M3, space=space, steady=steady)


def phi(s, forms):
    """Phi(s, xi): smallest eigenvalue of (mu s M2 + M3) x = theta M1 x."""
    if s < 0:
        raise ValueError("s must be >= 0")
    mu = forms.steady.params.mu
    vals = _sym_eigh(mu * s * forms.M2 + forms.M3, forms.M1)
    return float(vals[0])


def _phi_with_vector(s, forms):
    mu = forms.steady.params.mu
    vals, vecs = _sym_eigh(mu * s * forms.M2 + forms.M3, forms.M1, want_vectors=True)
    return float(vals[0]), vecs[:, 0]


def lambda_c(forms):
    """Largest eigenvalue of (-M3) x = theta (mu M2) x; the root bracket cap.

    Positive exactly when the profile carries an unstable region; Phi(s) < 0
    for s < lambda_c and Phi(s) >= 0 beyond it.
    """
    mu = forms.steady.params.mu
    vals = _sym_eigh(-forms.M3, mu * forms.M2)
    return float(vals[-1])


def lambda_upper_bound(xi, params, max_drho):
    """Closed-form cap on lambda_c(xi) for |D rho| <= max_drho."""
    if xi == 0:
        raise InvalidWavenumber("xi must be nonzero")
    xi2 = float(xi) ** 2
    R1, R2 = params.R1, params.R2
    denom = params.mu * (R1 * R2 * (R2 - R1) ** 2 * (2.0 * xi2 + 1.0) + (xi2 - 1.0) ** 2)
    return params.g * xi2 * R2**2 * max_drho / denom


def lambda0(forms, tol=DEFAULT_ROOT_TOL, max_iter=200):
    """Solve s^2 + Phi(s, xi) = 0 on (0, lambda_c] by bracketed bisection.

    Returns a DispersionPoint; a stable verdict (Phi(0) >= 0) carries no rate.
    The eigenvector is E1-normalized (c^T M1 c = 1) with a deterministic sign.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    k = int(round(forms.xi))
    params = forms.steady.params
    max_drho = forms.steady.profile.max_abs_drho
    upper = lambda_upper_bound(forms.xi, params, max_drho)

    phi0 = phi(0.0, forms)
    lamc = lambda_c(forms)
    if phi0 >= 0.0:
        return DispersionPoint(
            k=k, lambda0=None, lambda_c=max(lamc, 0.0), lambda_upper=upper
        )

    lo, f_lo = 0.0, phi0
    hi = lamc
    f_hi = hi * hi + phi(hi, forms)
    if f_hi < 0.0:
        raise NoBracket(
            f"f(lambda_c) = {f_hi:.3e} < 0 at k={k}; discretization inconsistency"
        )

    s = 0.5 * (lo + hi)
    fs = np.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        # secant guess accelerates the tail; fall back to the midpoint
        # whenever it leaves the bracket, so bracketing is never lost
        s_sec = lo - f_lo * (hi - lo) / (f_hi - f_lo)
        s_mid = 0.5 * (lo + hi)
        s = s_sec if (iterations % 2 == 0 and lo < s_sec < hi) else s_mid
        fs = s * s + phi(s, forms)
        if abs(fs) <= tol:
            break
        if fs < 0.0:
            lo, f_lo = s, fs
        else:
            hi, f_hi = s, fs
        if hi - lo <= 4.0 * np.finfo(float).eps * max(hi, 1.0):
            break
    if abs(fs) > tol:
        raise MaxIterations(
            f"|f| = {abs(fs):.3e} > tol = {tol:.1e} after {iterations} bisections at k={k}"
        )

    phi_val, c = _phi_with_vector(s, forms)
    W = forms.space.basis @ c
    if W[np.argmax(np.abs(W))] < 0:
        c, W = -c, -W
    return DispersionPoint(
        k=k,
        lambda0=s,
        lambda_c=lamc,
        lambda_upper=upper,
        W=W,
        iterations=iterations,
        phi_at_lambda0=s * s + phi_val,
        coords=c,
        space=forms.space,
    )


def _worker_count():
    env = os.environ.get("ANNULUS_RTI_THREADS")
    if env:
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


def sweep_k(steady, space, k_max=DEFAULT_KMAX, tol=DEFAULT_ROOT_TOL):
    """DispersionPoint for k = 1..k_max; LambdaTilde = max growth rate.

    Wavenumbers are independent tasks; a per-k failure marks that point and the
    sweep continues.  Results are aggregated in k order regardless of worker
    scheduling.  By parity in xi only k >= 1 is computed.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")

    def solve(k):
        try:
            forms = assemble_forms(space, steady, float(k))
            return lambda0(forms, tol=tol)
        except Exception as exc:  # noqa: BLE001 - per-k isolation is the contract
            return DispersionPoint(
                k=k, lambda0=None, lambda_c=np.nan, lambda_upper=np.nan, error=str(exc)
            )

    with ThreadPoolExecutor(max_workers=_worker_count()) as pool:
        points = list(pool.map(solve, range(1, k_max + 1)))

    rates = [(p.lambda0, p.k) for p in points if p.lambda0 is not None]
    if rates:
        LambdaTilde, argmax_k = max(rates)
        if argmax_k == k_max:
            warnings.warn(
                f"growth-rate maximum at k = k_max = {k_max}; sweep may be truncated",
                stacklevel=2,
            )
    else:
        LambdaTilde, argmax_k = None, None
    return DispersionCurve(points=points, LambdaTilde=LambdaTilde, argmax_k=argmax_k)


def _sector_pencil(space, steady, k, h_weighting):
    """Reduced 2D quadratic pencil (A, B) for the theta-mode k >= 1.

    Unknowns are the trial-space coordinates of v_r's radial factor a(r) plus
    the free density amplitude c(r) at every node; v_theta's factor is
    b = -D(r a)/k via incompressibility.
    """
    grid = space.grid
    params = steady.params
    r = grid.nodes
    w = grid.w
    n = grid.n
    mu, g = params.mu, params.g
    rho, drho, _ = eval_profile(steady.profile, r)
    rho = np.asarray(rho)
    drho = np.asarray(drho)
    xi = float(k)

    vals = basis_derivative_values(space)
    Bb, DB, A1, A2 = vals["B"], vals["DB"], vals["A1"], vals["A2"]
    m = Bb.shape[1]
    bmat = -A1 / xi
    Db = -A2 / xi
    ka_b = xi * Bb + bmat
    kb_a = xi * bmat + Bb
    Qv = mu * (
        (DB.T * (w * r)) @ DB
        + (Db.T * (w * r)) @ Db
        + (ka_b.T * (w / r)) @ ka_b
        + (kb_a.T * (w / r)) @ kb_a
    ) + (mu - params.alpha * params.R1) * np.outer(bmat[0], bmat[0])
    Mv = (Bb.T * (w * r * rho)) @ Bb + (bmat.T * (w * r * rho)) @ bmat

    if h_weighting == "unit":
        gamma = g + drho
        mass_c = w * r
    elif h_weighting == "buoyancy":
        if np.any(drho <= 0):
            raise ValueError("buoyancy weighting needs Drho > 0 on the whole interval")
        gamma = 2.0 * g * np.ones(n)
        mass_c = w * r * g / drho
    else:
        raise ValueError(f"unknown h_weighting {h_weighting!r}")

    G = Bb.T * (w * r * gamma)
    A = np.block([[Qv, 0.5 * G], [0.5 * G.T, np.zeros((n, n))]])
    M = np.block([[Mv, np.zeros((m, n))], [np.zeros((n, m)), np.diag(mass_c)]])
    return 0.5 * (A + A.T), M


def _sector_zero_pencil(space, steady):
    """Axisymmetric sector: v_r = 0, unknowns v_theta(r) with v_theta(R2) = 0, h(r)."""
    grid = space.grid
    params = steady.params
    r = grid.nodes
    w = grid.w
    n = grid.n
    rho, _, _ = eval_profile(steady.profile, r)
    rho = np.asarray(rho)
    E = np.eye(n)[:, :-1]  # basis with b(R2) = 0
    DE = grid.D1 @ E
    Qv = params.mu * ((DE.T * (w * r)) @ DE + (E.T * (w / r)) @ E) + (
        params.mu - params.alpha * params.R1
    ) * np.outer(E[0], E[0])
    Mv = (E.T * (w * r * rho)) @ E
    mb = E.shape[1]
    A = np.block([[Qv, np.zeros((mb, n))], [np.zeros((n, mb)), np.zeros((n, n))]])
    M = np.block([[Mv, np.zeros((mb, n))], [np.zeros((n, mb)), np.diag(w * r)]])
    return 0.5 * (A + A.T), M


def max_growth_2d(steady, space, k_max=DEFAULT_KMAX, h_weighting="unit"):
    """Maximum linear growth rate from the 2D quotient over (v_r, v_theta, h).

    Minimizes E~/E1~ sector-by-sector over theta-modes |k| <= k_max (k = 0
    included) and returns the most negative sector minimum, negated, together
    with the minimizing k.  "unit" weighting uses the plain r-weighted h mass
    and the (g + Drho) coupling; "buoyancy" uses the g/Drho-weighted h mass
    with a 2g coupling (defined only for strictly increasing profiles), for
    which the sector rates coincide with lambda0(k).
    """
    best_rate = -np.inf
    best_k = None
    A0, M0 = _sector_zero_pencil(space, steady)
    rate0 = -_sym_eigh(A0, M0)[0]
    best_rate, best_k = rate0, 0
    for k in range(1, k_max + 1):
        A, M = _sector_pencil(space, steady, k, h_weighting)
        rate = -_sym_eigh(A, M)[0]
        if rate > best_rate:
            best_rate, best_k = rate, k
    return float(best_rate), best_k
