"""Exception hierarchy. The CLI maps each family to an exit code."""

from __future__ import annotations


class BimemError(Exception):
    """Base class for all package errors."""


class ConfigError(BimemError, ValueError):
    """Invalid configuration value (k < 1, alpha outside [0, 1], ...)."""


class DataError(BimemError, ValueError):
    """Malformed input file, failed validation, or unsupported format version."""

    def __init__(self, message: str, path: str | None = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class BackendError(BimemError, RuntimeError):
    """A chat or embedding backend failed to produce a usable result."""

    def __init__(self, message: str, status: int | None = None, retryable: bool = False):
        self.status = status
        self.retryable = retryable
        super().__init__(message)


class TransportError(BackendError):
    """HTTP-level failure talking to a remote backend; always retryable."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message, status=status, retryable=True)


class OperatorParseError(BackendError):
    """An operator response could not be parsed into its JSON schema."""

    def __init__(self, message: str, field: str | None = None, offset: int | None = None):
        self.field = field
        self.offset = offset
        super().__init__(message, retryable=True)


class StageError(BimemError):
    """A construction stage aborted; ``stage`` names which one."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"construction stage '{stage}' failed: {cause}")
