"""Exception hierarchy for orps."""


class OrpsError(Exception):
    """Base class for all library errors."""


class NonSquare(OrpsError, ValueError):
    pass


class NonFinite(OrpsError, ValueError):
    pass


class DimensionMismatch(OrpsError, ValueError):
    pass


class EigenFailure(OrpsError, ArithmeticError):
    pass


class SingularGap(OrpsError, ArithmeticError):
    """The monodromy gap rho - T(omega) prod(E + B_k) is singular (A4 violated)."""


class IllConditioned(UserWarning):
    pass


class ReversedInterval(OrpsError, ValueError):
    pass


class InvalidSchedule(OrpsError, ValueError):
    pass


class QuadratureFailure(OrpsError, ArithmeticError):
    pass


class StepFailure(OrpsError, ArithmeticError):
    pass


class NonFiniteState(OrpsError, ArithmeticError):
    pass


class ShortTrajectory(OrpsError, ValueError):
    pass


class CommutationViolation(OrpsError, ValueError):
    pass


class NoConvergence(OrpsError, ArithmeticError):
    """Picard iteration did not reach tolerance; ``log`` holds the iteration record."""

    def __init__(self, message, log=None):
        super().__init__(message)
        self.log = log


class LipschitzEstimateUnstable(OrpsError, ArithmeticError):
    pass


class PreconditionFailed(OrpsError, ValueError):
    pass


class NewtonDiverged(OrpsError, ArithmeticError):
    pass


class ConfigParse(OrpsError, ValueError):
    """Configuration could not be turned into a system; message names the field."""


class SchemaMismatch(OrpsError, ValueError):
    pass
