"""Unstable eigenmode construction, residual verification and superposition.

From a dispersion point (k, lambda0, W) the full radial quadruple is

    w1 = W
    w2 = -D(r W)/k
    h1 = (r/k) [ 2 mu k W / r^2
                 - mu (D^2 + D/r - (k^2+1)/r^2 - lambda0 rho/mu) w2 ]
    h2 = -W Drho / lambda0

so that (v_r, v_theta, p, rho) = (w1, -i w2, h1, h2) e^{i k theta + lambda0 t}
solves the linearized system; w2 and h2 satisfy their defining relations to
rounding while the first momentum line is a genuine discretization residual.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatch, MissingGrowthRate, ZeroWavenumber
from .field2d import PolarField, field_zeros
from .profiles import eval_profile


@dataclass
class RadialMode:
    k: int
    lambda0: float
    w1: np.ndarray = field(repr=False)
    w2: np.ndarray = field(repr=False)
    h1: np.ndarray = field(repr=False)
    h2: np.ndarray = field(repr=False)
    grid: "object" = field(repr=False, default=None)


@dataclass
class ModeSet:
    """Band of modes k = j..j+N-1 with superposition coefficients a_k."""

    j: int
    coeffs: np.ndarray
    modes: list
    lambda_min: float

    @property
    def lambda_max(self):
        return max(m.lambda0 for m in self.modes)


def build_mode(k, point, steady, grid, refine=True):
    """RadialMode from a dispersion point carrying lambda0 and W.

    The construction needs third derivatives of the eigenfunction, so by
    default the eigenpair is polished in extended precision from its exact
    polynomial representation (chebyshev grids); refine=False or grids
    without one fall back to the coefficient-space derivative chain.
    """
    if k == 0:
        raise ZeroWavenumber("mode construction needs k != 0")
    if point.lambda0 is None or point.W is None:
        raise MissingGrowthRate(f"dispersion point at k={point.k} is stable")
    if int(round(abs(float(k)))) != abs(point.k):
        raise GridMismatch(f"requested k={k} but point solved k={point.k}")
    sign = 1.0 if k > 0 else -1.0

    can_refine = (
        refine
        and point.coords is not None
        and point.space is not None
        and getattr(point.space, "coeff_basis", None) is not None
        and point.space.grid is grid
    )
    if can_refine:
        from ._precision import refined_quadruple

        q = refined_quadruple(point.space, steady, point)
        return RadialMode(
            k=int(k),
            lambda0=q["lambda0"],
            w1=q["w1"],
            w2=sign * q["w2"],
            h1=q["h1"],
            h2=q["h2"],
            grid=grid,
        )

    lam = point.lambda0
    r = grid.nodes
    rho, drho, _ = eval_profile(steady.profile, r)
    rho = np.asarray(rho)
    drho = np.asarray(drho)
    mu = steady.params.mu
    kk = abs(float(k))

    w1 = point.W.copy()
    # derivatives of the smooth eigenfunction go through the coefficient
    # route: repeated dense-matrix differentiation would amplify eigensolver
    # roundoff beyond the residual tolerances
    u = r * w1
    w2 = -grid.smooth_derivative(u, 1) / kk
    dw2 = -grid.smooth_derivative(u, 2) / kk
    d2w2 = -grid.smooth_derivative(u, 3) / kk
    visc_w2 = mu * (d2w2 + dw2 / r - (kk * kk + 1.0) * w2 / r**2) - lam * rho * w2
    h1 = (r / kk) * (2.0 * mu * kk * w1 / r**2 - visc_w2)
    h2 = -w1 * drho / lam
    return RadialMode(
        k=int(k), lambda0=lam, w1=w1, w2=sign * w2, h1=h1, h2=h2, grid=grid
    )


def _l2(grid, values):
    return float(np.sqrt(grid.integrate(np.abs(values) ** 2)))


def _l2_interior(grid, values):
    v = np.zeros_like(np.asarray(values, dtype=float))
    v[1:-1] = values[1:-1]
    return float(np.sqrt(grid.integrate(v**2)))


def mode_residual(mode, steady, grid):
    """Relative L2 residuals of the four reduced equations.

    Returns (res1, res2, res_div, res_transport): the two momentum lines,
    incompressibility, and density transport, each normalized by the largest
    term entering the equation.  Differential equations are collocated at the
    interior nodes; the wall nodes carry the boundary conditions, whose
    defects are reported by robin_natural_residual and the mode invariants.
    """
    r = grid.nodes
    rho, drho, _ = eval_profile(steady.profile, r)
    rho = np.asarray(rho)
    drho = np.asarray(drho)
    mu = steady.params.mu
    g = steady.params.g
    lam = mode.lambda0
    kk = float(mode.k)
    w1, w2, h1, h2 = mode.w1, mode.w2, mode.h1, mode.h2

    def ode_op(u):
        d1 = grid.smooth_derivative(u, 1)
        d2 = grid.smooth_derivative(u, 2)
        return mu * (d2 + d1 / r - (kk**2 + 1.0) * u / r**2) - lam * rho * u

    terms1 = [ode_op(w1), -2.0 * mu * kk * w2 / r**2, -grid.smooth_derivative(h1, 1), -g * h2]
    res1 = _l2_interior(grid, sum(terms1)) / max(_l2(grid, t) for t in terms1)

    terms2 = [ode_op(w2), -2.0 * mu * kk * w1 / r**2, kk * h1 / r]
    res2 = _l2_interior(grid, sum(terms2)) / max(_l2(grid, t) for t in terms2)

    div_terms = [kk * w2, grid.smooth_derivative(r * w1, 1)]
    res_div = _l2(grid, sum(div_terms)) / max(_l2(grid, t) for t in div_terms)

    tr_terms = [lam * h2, w1 * drho]
    res_tr = _l2(grid, sum(tr_terms)) / max(_l2(grid, t) for t in tr_terms)
    return res1, res2, res_div, res_tr


def robin_natural_residual(W, grid, params):
    """Residual of D^2(rW) = (1/r - alpha/mu) D(rW) at R1, relative.

    The condition is natural for the variational problem, so the minimizer
    satisfies it only in the limit; the normalized defect should decay under
    grid refinement.
    """
    u = grid.nodes * W
    d1 = grid.smooth_derivative(u, 1)
    d2 = grid.smooth_derivative(u, 2)
    raw = d2[0] - (1.0 / params.R1 - params.alpha / params.mu) * d1[0]
    scale = float(np.sqrt(grid.integrate(d2**2)))
    return abs(raw) / max(scale, 1e-300)


def make_mode_set(j, coeffs, curve, steady, grid):
    """ModeSet for a contiguous band starting at j from a dispersion curve."""
    coeffs = np.asarray(coeffs, dtype=float)
    modes = []
    for offset, a in enumerate(coeffs):
        k = j + offset
        point = next(p for p in curve.points if p.k == k)
        modes.append(build_mode(k, point, steady, grid))
    lam_min = min(m.lambda0 for m in modes)
    return ModeSet(j=j, coeffs=coeffs, modes=modes, lambda_min=lam_min)


def superpose(mode_set, t, K=None):
    """Growing solution at time t, in Fourier-coefficient form.

    v_r   = sum a_k w1 e^{lambda0 t} cos(k theta)
    v_th  = sum a_k w2 e^{lambda0 t} sin(k theta)
    p,rho = sum a_k (h1, h2) e^{lambda0 t} cos(k theta)

    Returns PolarFields (vr, vtheta, p, rho).
    """
    grids = {id(m.grid) for m in mode_set.modes}
    if len(grids) != 1:
        raise GridMismatch("all modes in a set must share one grid")
    grid = mode_set.modes[0].grid
    if K is None:
        K = max(abs(m.k) for m in mode_set.modes)
    vr = field_zeros(K, grid)
    vt = field_zeros(K, grid)
    pf = field_zeros(K, grid)
    rf = field_zeros(K, grid)
    for a, m in zip(mode_set.coeffs, mode_set.modes):
        if abs(m.k) > K:
            raise GridMismatch(f"mode k={m.k} outside band K={K}")
        amp = a * np.exp(m.lambda0 * t)
        # cos -> (e^{ik} + e^{-ik})/2 ; sin -> (e^{ik} - e^{-ik})/(2i)
        vr.co(m.k)[:] += 0.5 * amp * m.w1
        vr.co(-m.k)[:] += 0.5 * amp * m.w1
        vt.co(m.k)[:] += -0.5j * amp * m.w2
        vt.co(-m.k)[:] += +0.5j * amp * m.w2
        pf.co(m.k)[:] += 0.5 * amp * m.h1
        pf.co(-m.k)[:] += 0.5 * amp * m.h1
        rf.co(m.k)[:] += 0.5 * amp * m.h2
        rf.co(-m.k)[:] += 0.5 * amp * m.h2
    return vr, vt, pf, rf


def sobolev_norm(fields, q):
    """Discrete H^q norm over the annulus strip of a field bundle.

    Unweighted (dr dtheta) measure; all mixed partials d_r^a d_theta^b with
    a + b <= q, radial derivatives by the grid matrices, angular by ik.
    """
    fields = list(fields)
    grid = fields[0].grid
    K = fields[0].K
    ks = np.arange(-K, K + 1)
    total = 0.0
    for f in fields:
        for a in range(q + 1):
            da = f.coeffs
            for _ in range(a):
                da = da @ grid.D1.T
            for b in range(q + 1 - a):
                weight = np.abs(ks.astype(float) ** b) ** 2  # |(ik)^b|^2
                sq = np.abs(da) ** 2 * weight[:, None]
                total += 2.0 * np.pi * float(grid.integrate(sq.sum(axis=0)))
    return np.sqrt(total)


@dataclass
class EnvelopeReport:
    times: np.ndarray
    norms: np.ndarray
    lower_bounds: np.ndarray
    upper_bounds: np.ndarray
    max_violation: float


def growth_envelope_check(mode_set, times, q, rate_cap=None):
    """Check e^{lam_min t} N(0) <= N(t) <= e^{cap t} N(0) in the H^q norm.

    cap defaults to the largest rate in the band; pass the sweep maximum to
    check against the global rate instead.  Violations are measured relative
    to the initial norm.
    """
    times = np.asarray(times, dtype=float)
    cap = mode_set.lambda_max if rate_cap is None else rate_cap
    n0 = sobolev_norm(superpose(mode_set, 0.0), q)
    norms = np.array([sobolev_norm(superpose(mode_set, t), q) for t in times])
    lower = n0 * np.exp(mode_set.lambda_min * times)
    upper = n0 * np.exp(cap * times)
    viol = np.maximum(lower - norms, norms - upper) / n0
    return EnvelopeReport(
        times=times,
        norms=norms,
        lower_bounds=lower,
        upper_bounds=upper,
        max_violation=float(np.max(np.maximum(viol, 0.0))),
    )


def write_mode_csv(path, mode, fmt="%.17g"):
    """CSV export r,w1,w2,h1,h2 of one radial mode."""
    with open(path, "w") as fh:
        fh.write("r,w1,w2,h1,h2\n")
        for i, r in enumerate(mode.grid.nodes):
            fh.write(
                ",".join(
                    fmt % v for v in (r, mode.w1[i], mode.w2[i], mode.h1[i], mode.h2[i])
                )
                + "\n"
            )
