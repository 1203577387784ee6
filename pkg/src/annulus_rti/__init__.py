"""Rayleigh-Taylor stability toolkit for 2D nonhomogeneous flow in an annulus.

Computes linear growth rates and unstable eigenmodes for a steady radial
density profile between a Navier-slip inner wall and a no-slip outer wall,
and validates them by evolving the linearized and nonlinear perturbation
equations in polar coordinates.
"""

from . import errors
from .dispersion import (
    DispersionCurve,
    DispersionPoint,
    QuadraticForms,
    assemble_forms,
    lambda0,
    lambda_c,
    lambda_upper_bound,
    max_growth_2d,
    phi,
    sweep_k,
)
from .profiles import (
    DensityProfile,
    PhysParams,
    SteadyState,
    eval_profile,
    hydrostatic_pressure,
    unstable_interval,
)
from .radial import RadialGrid, TrialSpace, build_grid, build_trial_space

__version__ = "0.1.0"
