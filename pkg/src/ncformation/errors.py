"""Exception types raised across the package."""


class NcFormationError(Exception):
    """Base class for all errors raised by ncformation."""


class InstanceError(NcFormationError, ValueError):
    """A problem instance or node index is invalid."""


class ContractError(NcFormationError, ValueError):
    """Arguments violate a function's shape or length contract."""


class SizeGuardError(NcFormationError):
    """An exhaustive search was refused because the instance is too large."""


class ConfigError(NcFormationError, ValueError):
    """A configuration value is invalid.

    ``line`` carries the 1-based line number in the source file when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DatasetError(NcFormationError, ValueError):
    """A CSV dataset row is malformed."""
