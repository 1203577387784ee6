"""Exception hierarchy for the annulus R-T toolkit."""


class AnnulusError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(AnnulusError):
    """Invalid run configuration or physical parameters."""


class OutOfDomain(AnnulusError):
    """Radius outside [R1, R2]."""


class NonPositiveDensity(AnnulusError):
    """Background density evaluated to a non-positive value."""


class TooFewNodes(AnnulusError):
    """Grid resolution below the supported minimum."""


class RankDeficiency(AnnulusError):
    """Boundary-constraint rows are numerically dependent."""


class InvalidWavenumber(AnnulusError):
    """Wavenumber outside the admissible set (xi = 0)."""


class NonSPD(AnnulusError):
    """A matrix required to be positive definite failed factorization."""


class EigenFailure(AnnulusError):
    """Dense (generalized) eigensolver did not converge."""


class NoBracket(AnnulusError):
    """Root bracket [0, lambda_c] does not change sign (discretization bug)."""


class MaxIterations(AnnulusError):
    """Iteration cap reached before the requested tolerance."""


class ZeroWavenumber(AnnulusError):
    """Mode construction requires k != 0."""


class MissingGrowthRate(AnnulusError):
    """A stable dispersion point carries no growth rate / eigenvector."""


class GridMismatch(AnnulusError):
    """Operands live on different grids or Fourier bands."""


class SingularNeumann(AnnulusError):
    """k=0 Neumann compatibility violated beyond tolerance."""


class SingularSystem(AnnulusError):
    """Per-mode linear system is singular to working precision."""


class CFLViolation(AnnulusError):
    """Timestep exceeds the advective CFL cap."""


class BlowUp(AnnulusError):
    """A field norm exceeded the overflow guard."""


class PositivityLoss(AnnulusError):
    """Total density dropped below the positivity floor."""


class NonPositiveSeries(AnnulusError):
    """Growth-rate fit requires strictly positive samples."""


class NonPositiveInput(AnnulusError):
    """Closed-form time formulas require positive inputs."""


class OutOfRange(AnnulusError):
    """Argument outside the formula's admissible range."""


class UnknownLemma(AnnulusError):
    """Inequality identifier not registered with the harness."""
