"""Exception types shared by all modules."""


class RestrictLabError(Exception):
    """Base class for library errors."""


class InvalidInputError(RestrictLabError, ValueError):
    """Raised when an argument violates an operation's precondition."""


class ResourceError(RestrictLabError):
    """Raised when a computation would exceed a configured size budget."""

    def __init__(self, message, required=None, limit=None):
        super().__init__(message)
        self.required = required
        self.limit = limit


class ConvergenceError(RestrictLabError):
    """Raised when an iterative method stops before reaching its tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class RecordParseError(RestrictLabError, ValueError):
    """Raised when a record file row cannot be parsed."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class RecordIOError(RestrictLabError, OSError):
    """Raised when a record file cannot be read or written; names the path."""

    def __init__(self, message, path=None):
        super().__init__(message)
        self.path = path
