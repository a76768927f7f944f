"""Exception hierarchy shared by every stage.

The CLI maps these onto exit codes: ``DataError`` -> 2, ``BackendError`` -> 3.
"""


class DialogScreenError(Exception):
    """Base class for all package errors."""


class DataError(DialogScreenError, ValueError):
    """Input data is malformed, inconsistent or insufficient."""


class ParseError(DataError):
    """A corpus or label line could not be parsed."""

    def __init__(self, message, line_number=None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class ScoreFormatError(DataError):
    """A scoring response did not contain a usable JSON object."""


class MissingFieldError(ScoreFormatError):
    def __init__(self, field):
        self.field = field
        super().__init__(f"missing field {field!r}")


class ScoreRangeError(DataError):
    """A score lies outside the range allowed for its field."""

    def __init__(self, field, value):
        self.field = field
        self.value = value
        super().__init__(f"{field}={value!r} is out of range")


class BackendError(DialogScreenError):
    """A remote model could not be reached or answered unusably."""


class ExtractionError(BackendError):
    def __init__(self, message, raw_response=None):
        self.raw_response = raw_response
        if raw_response is not None:
            message = f"{message}; raw response: {raw_response!r}"
        super().__init__(message)


class StageError(DialogScreenError):
    """Wraps a failure inside a pipeline stage with the stage name."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")
