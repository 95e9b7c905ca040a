"""Exception types shared across the package."""


class QbmorError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(QbmorError):
    """Operands have incompatible shapes."""


class SingularMatrix(QbmorError):
    """A factorization pivot fell below the rank tolerance."""


class RankTooSmall(QbmorError):
    """Numerical rank of the data is below the requested basis size."""


class NegativeDelay(QbmorError):
    """A time delay was negative."""


class TargetOrderUnreachable(QbmorError):
    """The requested reduced order cannot be produced by the chosen scheme."""


class RankDeficientBasis(QbmorError):
    """A projection basis does not have full column rank."""


class IntegrationFailure(QbmorError):
    """The implicit time stepper failed to converge."""


class ZeroReference(QbmorError):
    """A relative error was requested against an identically zero reference."""
