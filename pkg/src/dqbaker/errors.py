"""Exception hierarchy for the dissipative baker simulator."""


class DQBakerError(Exception):
    """Base class for all package errors."""


class NonPrimitiveString(DQBakerError, ValueError):
    pass


class NotClosed(DQBakerError, ValueError):
    pass


class IndexOutOfRange(DQBakerError, IndexError):
    pass


class OddDimension(DQBakerError, ValueError):
    pass


class ConvergenceFailure(DQBakerError, ArithmeticError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DegenerateNorm(DQBakerError, ArithmeticError):
    pass


class StepTooLarge(DQBakerError, ValueError):
    pass


class BasisMismatch(DQBakerError, ValueError):
    pass


class NegativeForm(DQBakerError, ArithmeticError):
    pass


class GridMismatch(DQBakerError, ValueError):
    pass


class ObserverError(DQBakerError, RuntimeError):
    """An observer callback failed during evolution."""


class ConfigError(DQBakerError, ValueError):
    """Invalid run configuration; ``path`` names the offending field."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
