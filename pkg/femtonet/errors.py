"""
Exception hierarchy shared by the numeric services and the experiment runner.
"""


class FemtonetError(Exception):
    """Base class for all femtonet errors."""


class DomainError(FemtonetError, ValueError):
    """An argument lies outside the domain of the operation."""


class BracketError(DomainError):
    """A root bracket shows no sign change."""


class InfeasibleError(FemtonetError):
    """The requested target cannot be met for any admissible parameter."""


class NumericError(FemtonetError, RuntimeError):
    """An iterative method or quadrature failed to converge."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state or {}


class ConfigError(FemtonetError):
    """An experiment configuration value is missing or malformed."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
