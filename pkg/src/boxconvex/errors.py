"""Exception hierarchy shared by every module."""


class BoxConvexError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(BoxConvexError, ValueError):
    """A point or parameter lies outside the admissible domain."""


class PointSystemError(BoxConvexError, ValueError):
    """A node system is malformed (duplicates, wrong length, out of range)."""


class EvaluationError(BoxConvexError, ArithmeticError):
    """A function could not be evaluated (division by zero, off-grid lookup, overflow)."""


class ParseError(BoxConvexError, ValueError):
    """Syntax or semantic error in an expression; `position` is a 0-based column."""

    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class PreconditionError(BoxConvexError, ValueError):
    """Inputs violate an operation's stated precondition."""


class SchemaError(BoxConvexError, ValueError):
    """A JSON document does not match the expected schema; `path` locates the field."""

    def __init__(self, message, path=""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
