"""Exception hierarchy shared across the package."""


class BracketSimError(Exception):
    """Base class for all package errors."""


class DimensionError(BracketSimError, ValueError):
    """State or field dimension does not match."""


class InputError(BracketSimError, ValueError):
    """Invalid argument outside the documented domain."""


class NumericsError(BracketSimError, ArithmeticError):
    """A computation produced non-finite or unrepresentable values."""


class DivergenceError(NumericsError):
    """Integration hit a non-finite state.

    Carries the partial trajectory up to the last finite sample in
    ``.trajectory`` (may be None when not even the first step survived).
    """

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class AssumptionViolationError(BracketSimError, ValueError):
    """A structural assumption (dither bounds, interaction condition) fails."""


class InfeasibleBudgetError(BracketSimError, ValueError):
    """The contraction-budget condition cannot be satisfied."""


class ResolutionError(BracketSimError, RuntimeError):
    """Trajectory or quadrature resolution too coarse for the request."""


class ConfigError(BracketSimError, ValueError):
    """Malformed or inconsistent scenario configuration."""
