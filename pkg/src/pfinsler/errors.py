"""Exception hierarchy shared by all modules."""


class FinslerError(Exception):
    """Base class for errors raised by this package."""


class ExprSyntaxError(FinslerError):
    """Malformed expression text; ``position`` is the 1-based column."""

    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        super().__init__(f"{message} at position {position}" + (f" in {text!r}" if text else ""))


class UnknownIdentifierError(ExprSyntaxError):
    pass


class DomainError(FinslerError, ValueError):
    """A value left the set on which a function or metric is defined."""


class StencilError(DomainError):
    """A finite-difference stencil point fell outside the domain."""

    def __init__(self, message: str, point=None):
        self.point = point
        super().__init__(message)


class DegenerateError(FinslerError):
    """A tensor or quadratic form is numerically degenerate."""


class ConvergenceError(FinslerError):
    """An iterative solver failed to converge."""


class NoRootError(ConvergenceError):
    """No root of the navigation equation on the requested branch."""


class ChartExitError(DomainError):
    """An integrated trajectory left the chart."""


class ConfigError(FinslerError):
    """Invalid scenario configuration."""
