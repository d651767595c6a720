"""Exception hierarchy shared across the package.

``ValidationError`` covers bad inputs (CLI exit code 1), ``NumericalError``
covers failures of an otherwise well-posed computation (CLI exit code 2).
"""


class XxzError(Exception):
    """Base class for all package errors."""


class ValidationError(XxzError, ValueError):
    """Invalid parameters or arguments; names the offending field."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class CapacityError(ValidationError):
    """Requested system size exceeds what a dense/explicit method can hold."""


class UnsupportedRegimeError(ValidationError):
    """Operation requested outside its parameter regime (e.g. |Delta| >= J)."""


class DegenerateDriveError(XxzError):
    """Omega = 0: the steady state is the polarized product state and the
    generic machinery is rank deficient there."""


class GaugeError(XxzError):
    """A gauge transformation or gauge construction failed."""


class NumericalError(XxzError):
    """A numerical routine failed to meet its tolerance or converge."""
