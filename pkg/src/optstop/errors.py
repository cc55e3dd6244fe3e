"""Exception hierarchy shared by all modules.

Every error carries a plain message; grid-located errors also expose the
offending abscissa as ``.x`` so callers can report it.
"""


class OptStopError(Exception):
    """Base class for every error raised by the package."""


# -- configuration / validation ------------------------------------------------

class ConfigError(OptStopError):
    pass


class ValidationError(ConfigError):
    def __init__(self, message, x=None):
        super().__init__(message)
        self.x = x


class NonPositiveVolatility(ValidationError):
    pass


class NegativeReward(ValidationError):
    pass


class NegativeCost(ValidationError):
    pass


class NonPositiveDiscount(ValidationError):
    pass


class InvalidSpec(ConfigError):
    pass


class DomainError(ConfigError, ValueError):
    pass


class PoleInDenominator(DomainError):
    pass


class BadOrdering(DomainError):
    pass


class OutOfGrid(DomainError):
    pass


# -- numerical failures ---------------------------------------------------------

class SolverError(OptStopError):
    pass


class QuadratureFailure(SolverError):
    pass


class IntegrationBlowup(SolverError):
    pass


class NonMonotone(SolverError):
    pass


class NotIntegrable(SolverError):
    pass


class SeriesDivergence(SolverError):
    pass


class UnboundedValue(SolverError):
    pass


class NoInteriorSolution(SolverError):
    pass


class NonPositiveRate(SolverError):
    pass


class PGammaNonPositive(SolverError):
    pass


class SimulationError(OptStopError):
    pass


class HorizonTooShort(SimulationError):
    def __init__(self, message, truncated_fraction=None):
        super().__init__(message)
        self.truncated_fraction = truncated_fraction


class UnsupportedFamily(SimulationError):
    pass


class UnsupportedCallable(SimulationError):
    pass


class VerificationFailed(OptStopError):
    pass


# -- warnings -------------------------------------------------------------------

class SupAtInfinity(UserWarning):
    """The ratio supremum is only approached at the right end of the grid."""


class NonSmoothPayoffAtOptimum(UserWarning):
    """The reward has a kink at an optimal boundary; smooth fit was not checked."""


class StartAboveThreshold(UserWarning):
    """The starting point already lies in the stopping region."""
