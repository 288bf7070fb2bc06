"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
NumericsError (including DivergenceError) -> 4.
"""


class GrafnError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(GrafnError):
    """Invalid configuration: bad key, bad value, inconsistent settings."""


class DataError(GrafnError):
    """Malformed or inconsistent dataset / split files."""


class NumericsError(GrafnError):
    """Numerical contract violation: shape mismatch, zero-norm row, bad tape use."""


class DivergenceError(NumericsError):
    """Training produced a non-finite loss."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history or []
