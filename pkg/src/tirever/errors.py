"""Exception hierarchy; the CLI maps these onto exit codes."""


class TireverError(Exception):
    """Base class for all package errors."""


class DataError(TireverError, ValueError):
    """Invalid input data or arguments (CLI exit code 2)."""


class DegenerateSeriesError(DataError):
    """Series has (numerically) zero variance."""


class FitError(TireverError, RuntimeError):
    """Numerical estimation failed (CLI exit code 3)."""
