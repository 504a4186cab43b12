"""Exception hierarchy for the raspref package."""


class RasprefError(Exception):
    """Base class for every error raised by this package."""


class OutOfRange(RasprefError, ValueError):
    pass


class ValidationError(RasprefError, ValueError):
    pass


class DimensionMismatch(RasprefError, ValueError):
    pass


class ZeroVector(RasprefError, ValueError):
    pass


class StorageFailure(RasprefError, OSError):
    pass


class InsufficientSamples(RasprefError, ValueError):
    pass


class MissingScore(RasprefError, ValueError):
    pass


class LengthMismatch(RasprefError, ValueError):
    pass


class ZeroWeightSum(RasprefError, ValueError):
    pass


class InvalidEditIndex(RasprefError, IndexError):
    pass


class ConfigError(RasprefError, ValueError):
    pass


class ParseError(RasprefError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MissingField(ParseError):
    def __init__(self, field: str, line: int | None = None):
        self.field = field
        super().__init__(f"missing field {field!r}", line)


class BackendError(RasprefError):
    """Failure talking to (or interpreting) a model backend."""


class BackendUnavailable(BackendError):
    pass


class EmptyCompletion(BackendError):
    pass


class UnparsableScore(BackendError):
    pass


class UnparsableEdits(BackendError):
    pass
