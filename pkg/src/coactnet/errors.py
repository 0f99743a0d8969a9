"""Exception and warning types shared across the package."""


class CoactnetError(Exception):
    """Base class for all package errors."""


class ValidationError(CoactnetError):
    """Input data violates a declared precondition (bad record, bad config)."""


class ParseError(ValidationError):
    """A record could not be decoded; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ContractViolationError(CoactnetError):
    """An internal operation was called with arguments outside its contract."""


class UnknownActionTypeError(ValidationError):
    """An action type was requested that is not in the dataset's declared set."""


class MissingFieldError(ValidationError):
    """An operation needs an event field that the input does not carry."""

    def __init__(self, field: str, message: str | None = None):
        self.field = field
        super().__init__(message or f"required event field missing: {field!r}")


class NoCoordinationEvidenceError(CoactnetError):
    """No content key is shared by two or more users; nothing to tune or build."""


class UndefinedMetricError(CoactnetError):
    """A score is undefined for the given ground truth (e.g. no positives)."""


class DegenerateGraphWarning(RuntimeWarning):
    """A quality score was computed on a graph with zero total edge weight."""
