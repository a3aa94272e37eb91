"""Exception types shared across the package."""


class CovcohError(Exception):
    """Base class for all package errors."""


class DimensionError(CovcohError, ValueError):
    pass


class PreconditionError(CovcohError, ValueError):
    pass


class NumericalError(CovcohError, RuntimeError):
    pass


class StiffnessError(NumericalError):
    pass


class DegeneracyError(PreconditionError):
    pass


class UnknownModeError(CovcohError, KeyError):
    pass


class InvalidStateError(PreconditionError):
    pass


class InvalidChannelError(PreconditionError):
    pass


class PhaseMatchingError(PreconditionError):
    """Raised when a saturating construction needs phase-matched input."""

    def __init__(self, message, quadruple=None):
        super().__init__(message)
        self.quadruple = quadruple


class NonErgodicError(PreconditionError):
    pass


class DetailedBalanceError(PreconditionError):
    pass


class ConsistencyError(NumericalError):
    pass
