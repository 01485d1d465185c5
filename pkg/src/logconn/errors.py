class LogConnError(Exception):
    """Base class for library errors."""


class UsageError(LogConnError, ValueError):
    """Inputs do not meet an operation's preconditions."""


class NotNilpotentError(UsageError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class NotIntegrableError(UsageError):
    def __init__(self, message, pair=None, residual=None):
        super().__init__(message)
        self.pair = pair
        self.residual = residual


class DocumentError(LogConnError):
    """Malformed input document. Carries a location when one is known."""

    def __init__(self, message, line=None, column=None, path=None):
        where = []
        if line is not None:
            where.append(f"line {line}, column {column}")
        if path:
            where.append(f"at {path}")
        text = message if not where else f"{message} ({'; '.join(where)})"
        super().__init__(text)
        self.line = line
        self.column = column
        self.path = path
