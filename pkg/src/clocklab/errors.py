"""Exception types shared across the package."""


class ClockLabError(Exception):
    """Base class for errors raised by this package."""


class CircuitSyntaxError(ClockLabError):
    """Raised when a circuit file cannot be parsed.

    Carries the 1-based line number of the offending line in ``line``.
    """

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class CapacityError(ClockLabError):
    """Raised when a requested object exceeds the configured dimension cap."""


class NonConvergenceError(ClockLabError):
    """Raised when an iterative eigensolver fails to reach tolerance."""


class NonInterpolableGateError(ClockLabError):
    """Raised for a CUSTOM gate whose principal fractional power is ambiguous."""
