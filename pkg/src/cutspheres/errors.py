"""Exception hierarchy."""


class CutSpheresError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameter(CutSpheresError, ValueError):
    pass


class NonFiniteValue(CutSpheresError, ArithmeticError):
    """A constraint evaluated to NaN or infinity where a finite value was required."""

    def __init__(self, label, value):
        super().__init__(f"constraint {label!r} returned non-finite value {value!r}")
        self.label = label
        self.value = value


class SubgradientUnavailable(CutSpheresError):
    pass


class DegenerateHalfspace(CutSpheresError):
    """Raised when a ball is requested for a cut with zero curvature."""


class PreconditionViolated(CutSpheresError, ValueError):
    pass


class InfeasiblePolyhedron(CutSpheresError):
    """The polyhedron is empty.

    ``certificate`` holds nonnegative row weights ``u`` with ``G.T @ u ~ 0`` and
    ``h @ u < 0`` when one was produced.
    """

    def __init__(self, message="polyhedron is empty", certificate=None):
        super().__init__(message)
        self.certificate = certificate


class IterationLimit(CutSpheresError):
    def __init__(self, message, best=None, residuals=None):
        super().__init__(message)
        self.best = best
        self.residuals = residuals


class SubsolverFailure(CutSpheresError):
    pass


class BudgetExceeded(CutSpheresError):
    pass


class UnboundedPolyhedron(CutSpheresError):
    def __init__(self, ray):
        super().__init__("polyhedron is unbounded")
        self.ray = ray


class DatasetMismatch(CutSpheresError, ValueError):
    pass


class ParseError(CutSpheresError, ValueError):
    def __init__(self, line, column, reason):
        super().__init__(f"line {line}, column {column}: {reason}")
        self.line = line
        self.column = column
        self.reason = reason


class ConfigError(CutSpheresError):
    pass
