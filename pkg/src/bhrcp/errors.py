"""Exception and warning types shared across the package."""


class BhrcpError(Exception):
    """Base class for all package errors."""


class DataError(BhrcpError, ValueError):
    """Invalid input data or configuration."""


class NumericalError(BhrcpError, ArithmeticError):
    """A numerical routine failed (non-convergence, domain breakdown)."""


class DiagnosticsWarning(UserWarning):
    """A diagnostic check did not come out as expected; results may be meaningless."""
