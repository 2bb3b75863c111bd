"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: usage errors -> 1, data/format errors -> 2,
numeric/capacity errors -> 3.
"""


class HyperloomError(Exception):
    """Base class for all package errors."""


class DimensionError(HyperloomError):
    """Operands have incompatible lengths or shapes."""


class DomainError(HyperloomError):
    """Input violates a mathematical precondition (off-manifold, out of ball)."""


class ParseError(HyperloomError):
    """Malformed text input; carries a line number when available."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(HyperloomError):
    """Missing or inconsistent model/run configuration."""


class CapacityError(HyperloomError):
    """A computation would exceed a configured enumeration or work cap."""


class SignatureError(HyperloomError):
    """A Gram matrix does not have the expected eigenvalue signature."""

    def __init__(self, message, spectrum=None):
        super().__init__(message)
        self.spectrum = spectrum


class DegenerateError(HyperloomError):
    """Input is degenerate for the requested statistic (e.g. single-class labels)."""


class LineSearchError(HyperloomError):
    """The scalar line search hit a non-finite objective value."""
