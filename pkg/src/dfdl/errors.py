"""Exception hierarchy shared by every dfdl module."""


class DFDLError(Exception):
    """Base class for all errors raised by dfdl."""


class InvalidInputError(DFDLError, ValueError):
    """Arguments violate a documented precondition (shapes, ranges)."""


class InvariantError(InvalidInputError):
    """A value (often loaded from disk) violates a domain-type invariant."""


class ConvergenceError(DFDLError, RuntimeError):
    """An iterative solver hit its iteration cap.

    Attributes
    ----------
    duality_gap : float
        Duality-gap estimate at the last iterate.
    iterations : int
        Number of sweeps performed.
    """

    def __init__(self, message, duality_gap=float("nan"), iterations=0):
        super().__init__(message)
        self.duality_gap = duality_gap
        self.iterations = iterations


class NumericalError(DFDLError, ArithmeticError):
    """Numerical breakdown (eigen-solver failure, surrogate increase)."""


class TrainingError(DFDLError, RuntimeError):
    """Dictionary training cannot continue."""


class FormatError(DFDLError, ValueError):
    """A file does not follow the expected on-disk format."""


class UnsupportedVersionError(FormatError):
    """A model file carries a version this build does not read."""
