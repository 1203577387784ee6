"""Steady radial density profiles, hydrostatic pressure, and R-T diagnostics.

A steady state has zero velocity, a radial density rho_bar(r) > 0, and a
pressure fixed by D p_bar = -rho_bar * g (gravity points inward).  The flow is
a Rayleigh-Taylor candidate wherever D rho_bar > 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigError, NonPositiveDensity, OutOfDomain

_KINDS = ("constant", "linear", "tanh-layer", "polynomial", "tabulated")


@dataclass(frozen=True)
class PhysParams:
    """Geometry and fluid constants.

    The standing admissibility condition 1 - alpha*R1/mu >= 0 is enforced at
    construction; configurations violating it are rejected outright.
    """

    R1: float
    R2: float
    mu: float
    g: float = 1.0
    alpha: float = 0.0

    def __post_init__(self):
        if not (self.R1 > 0 and self.R2 > self.R1):
            raise ConfigError(f"need R2 > R1 > 0, got R1={self.R1}, R2={self.R2}")
        if self.mu <= 0:
            raise ConfigError(f"viscosity must be positive, got mu={self.mu}")
        if self.g < 0:
            raise ConfigError(f"gravity magnitude must be >= 0, got g={self.g}")
        if 1.0 - self.alpha * self.R1 / self.mu < 0:
            raise ConfigError(
                f"slip coefficient violates 1 - alpha*R1/mu >= 0 "
                f"(alpha={self.alpha}, R1={self.R1}, mu={self.mu})"
            )

    @property
    def slip_weight(self):
        """Boundary weight 1 - alpha*R1/mu multiplying the R1 dissipation term."""
        return 1.0 - self.alpha * self.R1 / self.mu


class DensityProfile:
    """Background density rho_bar(r) on [R1, R2] with two derivatives.

    kinds and params:
      constant    {"rho0"}
      linear      {"rho0", "slope"}         rho0 + slope*(r - R1)
      tanh-layer  {"rho0", "amp", "center", "width"}
                                            rho0 + amp*tanh((r - center)/width)
      polynomial  {"coeffs"}                sum c_j r^j, ascending powers
      tabulated   {"r", "rho"}              C^2 cubic-spline interpolant
    """

    def __init__(self, kind, params, R1, R2):
        if kind not in _KINDS:
            raise ConfigError(f"unknown profile kind {kind!r}")
        self.kind = kind
        self.params = dict(params)
        self.R1 = float(R1)
        self.R2 = float(R2)
        if kind == "tabulated":
            r = np.asarray(self.params["r"], dtype=float)
            rho = np.asarray(self.params["rho"], dtype=float)
            if r.ndim != 1 or r.shape != rho.shape or len(r) < 4:
                raise ConfigError("tabulated profile needs matching 1-d r, rho arrays")
            if np.any(np.diff(r) <= 0):
                raise ConfigError("tabulated radii must be strictly increasing")
            if not (r[0] == self.R1 and r[-1] == self.R2):
                raise ConfigError("tabulated radii must start at R1 and end at R2")
            self._spline = CubicSpline(r, rho)
        elif kind == "polynomial":
            coeffs = np.asarray(self.params["coeffs"], dtype=float)
            if coeffs.ndim != 1 or len(coeffs) == 0:
                raise ConfigError("polynomial profile needs a 1-d coefficient list")
            self.params["coeffs"] = coeffs
        self._validate_positive()
        self.max_abs_drho = self._scan_max_abs_drho()

    def _raw_eval(self, r):
        r = np.asarray(r)
        if not np.issubdtype(r.dtype, np.floating):
            r = r.astype(float)
        if self.kind == "constant":
            rho0 = self.params["rho0"]
            z = np.zeros_like(r)
            return rho0 + z, z.copy(), z.copy()
        if self.kind == "linear":
            rho0, slope = self.params["rho0"], self.params["slope"]
            return rho0 + slope * (r - self.R1), np.full_like(r, slope), np.zeros_like(r)
        if self.kind == "tanh-layer":
            rho0 = self.params["rho0"]
            amp = self.params["amp"]
            center = self.params["center"]
            width = self.params["width"]
            t = np.tanh((r - center) / width)
            sech2 = 1.0 - t * t
            return (
                rho0 + amp * t,
                amp * sech2 / width,
                -2.0 * amp * t * sech2 / width**2,
            )
        if self.kind == "polynomial":
            c = self.params["coeffs"]
            p = np.polynomial.polynomial.Polynomial(c)
            return p(r), p.deriv(1)(r), p.deriv(2)(r)
        # tabulated
        return self._spline(r), self._spline(r, 1), self._spline(r, 2)

    def _validate_positive(self):
        r = np.linspace(self.R1, self.R2, 4001)
        rho, _, _ = self._raw_eval(r)
        if np.any(rho <= 0):
            bad = r[np.argmin(rho)]
            raise NonPositiveDensity(f"rho_bar <= 0 near r = {bad:.6g}")

    def _scan_max_abs_drho(self):
        r = np.linspace(self.R1, self.R2, 4001)
        _, drho, _ = self._raw_eval(r)
        return float(np.max(np.abs(drho)))


@dataclass
class SteadyState:
    """Density profile plus hydrostatic pressure samples on a grid."""

    profile: DensityProfile
    pbar: np.ndarray
    params: PhysParams
    grid: "object" = field(default=None, repr=False)


def eval_profile(profile, r):
    """Return (rho_bar, D rho_bar, D^2 rho_bar) at radius r.

    r may be scalar or array; every entry must lie in [R1, R2].  The input
    dtype is preserved for floating types, so extended-precision evaluation
    of the analytic profile kinds is possible.
    """
    arr = np.asarray(r)
    if not np.issubdtype(arr.dtype, np.floating):
        arr = arr.astype(float)
    if np.any(arr < profile.R1 - 1e-12) or np.any(arr > profile.R2 + 1e-12):
        raise OutOfDomain(f"radius outside [{profile.R1}, {profile.R2}]")
    rho, drho, d2rho = profile._raw_eval(arr)
    if np.any(rho <= 0):
        raise NonPositiveDensity("profile evaluated to non-positive density")
    if np.isscalar(r) or arr.ndim == 0:
        return float(rho), float(drho), float(d2rho)
    return rho, drho, d2rho


def hydrostatic_pressure(profile, params, grid):
    """Steady state with p_bar(R1) = 0 and D p_bar = -rho_bar * g on the grid.

    The pressure is computed by solving the collocated first-order system with
    the gauge row replacing the equation at R1, so the discrete balance holds
    exactly at every other node.
    """
    rho, _, _ = eval_profile(profile, grid.nodes)
    A = grid.D1.copy()
    rhs = -params.g * np.asarray(rho)
    A[0] = 0.0
    A[0, 0] = 1.0
    rhs = rhs.copy()
    rhs[0] = 0.0
    pbar = np.linalg.solve(A, rhs)
    return SteadyState(profile=profile, pbar=pbar, params=params, grid=grid)


def unstable_interval(profile, grid, bisection_steps=60):
    """Maximal subintervals of [R1, R2] where D rho_bar > 0.

    Scans the sign of D rho_bar on a refinement of the grid nodes, then
    sharpens each endpoint with fixed-count bisection.  An empty list means no
    R-T unstable region.
    """
    samples = np.unique(
        np.concatenate(
            [grid.nodes, np.linspace(profile.R1, profile.R2, 8 * grid.n + 1)]
        )
    )
    _, drho, _ = eval_profile(profile, samples)
    drho = np.asarray(drho)
    pos = drho > 0.0

    def refine(lo, hi):
        # sign change bracketed in [lo, hi]; returns the crossing radius
        flo = eval_profile(profile, lo)[1]
        for _ in range(bisection_steps):
            mid = 0.5 * (lo + hi)
            fmid = eval_profile(profile, mid)[1]
            if (fmid > 0.0) == (flo > 0.0):
                lo, flo = mid, fmid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    intervals = []
    i = 0
    m = len(samples)
    while i < m:
        if not pos[i]:
            i += 1
            continue
        j = i
        while j + 1 < m and pos[j + 1]:
            j += 1
        lo = samples[i] if i == 0 else refine(samples[i - 1], samples[i])
        hi = samples[j] if j == m - 1 else refine(samples[j + 1], samples[j])
        intervals.append((float(lo), float(hi)))
        i = j + 1
    return intervals
