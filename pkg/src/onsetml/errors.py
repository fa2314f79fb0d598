"""Exception types shared across the package.

The CLI maps these onto exit codes: :class:`DataError` -> 2,
:class:`TrainingError` -> 3, anything argument-related -> 1.
"""


class OnsetmlError(Exception):
    """Base class for errors raised by this package."""


class DataError(OnsetmlError):
    """Malformed or unusable input data (bad CSV, label outside {0,1}, ...)."""


class TrainingError(OnsetmlError):
    """Numerical or structural failure while fitting a model."""
