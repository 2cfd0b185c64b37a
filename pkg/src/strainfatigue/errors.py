"""Exception types shared across the package."""


class StrainFatigueError(Exception):
    """Base class for all package errors."""


class DomainError(StrainFatigueError, ValueError):
    """Input lies outside the domain where an operation is defined."""


class ArgumentError(StrainFatigueError, ValueError):
    """A configuration or call argument is invalid."""


class NoCycle(StrainFatigueError):
    """A segment holds no usable peak/trough pair."""


class SessionLoadError(DomainError):
    """A session file or manifest could not be loaded."""

    def __init__(self, path, message, line=None):
        self.path = str(path)
        self.line = line
        where = self.path if line is None else f"{self.path}:{line}"
        super().__init__(f"{where}: {message}")
