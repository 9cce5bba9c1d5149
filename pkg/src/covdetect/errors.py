"""Exception types raised by the package."""


class InvalidParameterError(ValueError):
    """An argument is outside the domain an operation accepts."""


class DegenerateSubspaceError(ArithmeticError):
    """The shifted signal subspace is numerically rank deficient."""


class SingularSystemError(ArithmeticError):
    """The MMSE normal equations cannot be solved."""


class PatternLimitError(RuntimeError):
    """Exhaustive search was refused because the pattern count is too large."""


class ConfigError(ValueError):
    """An experiment configuration violates one of its invariants."""
