class SvnetError(Exception):
    """Base class for package errors."""


class ConfigError(SvnetError, ValueError):
    """Invalid parameters or configuration, detected before any work starts."""


class DataError(SvnetError, ValueError):
    """Malformed or inconsistent input data."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class WindowTruncationError(DataError):
    """An analysis window runs past the end of the available data."""
