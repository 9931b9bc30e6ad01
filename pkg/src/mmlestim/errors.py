"""Exception and warning types shared across the package."""


class EstimError(Exception):
    """Base class for all package-specific failures."""


class DomainError(EstimError, ValueError):
    """Input outside the admissible domain, e.g. a non-positive parameter."""


class DataFormatError(EstimError, ValueError):
    """A data or config file could not be parsed; the message names the line."""


class ConfigError(EstimError, ValueError):
    """Invalid run configuration: unknown key, missing field, or bad value."""


class NotPositiveDefinite(EstimError):
    """A matrix required to be symmetric positive definite failed Cholesky."""


class LinearSolveFailure(EstimError):
    """A linear solve could not meet its residual contract."""


class NonFiniteEvaluation(EstimError):
    """A function probe returned NaN or infinity where a finite value is needed."""


class QuadratureNotConverged(EstimError):
    """The order-doubling test failed at the maximum quadrature order."""


class NoConvergence(EstimError):
    """Newton iteration failed to reach the stationarity tolerance."""


class DegenerateData(EstimError, ValueError):
    """The data carry no information for the fit, e.g. all observations equal."""


class SymmetryViolation(EstimError):
    """A tensor that must be permutation symmetric failed its symmetry check."""


class TooManyFailures(EstimError):
    """More than the tolerated share of simulation replicates failed to converge."""


class ImproperPriorWarning(UserWarning):
    """Codelengths under an improper prior hold only up to an additive constant."""
