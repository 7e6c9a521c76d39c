"""Exception hierarchy shared across the package."""


class BTFError(Exception):
    """Base class for all package errors."""


class ConfigError(BTFError):
    """Invalid or inconsistent configuration."""


class DimensionError(BTFError, ValueError):
    """Incompatible tensor shapes."""


class DataError(BTFError):
    """Problems with input data files or sentences."""


class ParseError(DataError):
    """A dataset line does not follow the triplet grammar."""

    def __init__(self, message, lineno=None, path=None):
        self.message = message
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if lineno is not None:
            where += f"{lineno}: "
        elif where:
            where += " "
        super().__init__(where + message)


class LengthError(DataError):
    """Sentence longer than the configured maximum."""


class NonFiniteError(BTFError, ArithmeticError):
    """NaN or Inf appeared in a forward or backward pass."""


class CheckpointError(BTFError):
    """Unreadable, corrupt or incompatible checkpoint file."""
