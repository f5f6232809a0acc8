"""Exception types shared across the package.

Every error raised on purpose by this package derives from EcgSparseError,
so callers (in particular the CLI) can separate validation problems from
data problems without string matching.
"""


class EcgSparseError(Exception):
    """Base class for all package errors."""


class ValidationError(EcgSparseError):
    """Bad configuration or arguments: the caller asked for something impossible."""


class DataError(EcgSparseError):
    """The input data itself is malformed or insufficient."""


# --- validation family -------------------------------------------------

class BadConfigError(ValidationError):
    pass


class TooShortError(ValidationError):
    """Signal shorter than the transform or resampler can accept."""


# --- data family -------------------------------------------------------

class ShapeMismatchError(DataError):
    """Two inputs that must agree dimensionally do not (e.g. dictionary k
    vs. code k); classified as a data error because at the tool boundary it
    always means two artifacts disagree."""


class TruncatedInputError(DataError):
    """Binary stream ended before the declared sample count was reached."""


class ParseError(DataError):
    """Malformed text input; carries the offending line number when known."""

    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class CorruptFileError(DataError):
    """Binary artifact failed magic/length checks."""


class NotEnoughDataError(DataError):
    pass


class TooFewPerClassError(DataError):
    pass


class SingleClassError(DataError):
    """A binary SVM was asked to train on one class."""


class DegenerateInputError(DataError):
    """An input that makes the requested statistic undefined (e.g. zero-norm beat)."""


class MaxIterationsError(EcgSparseError):
    """An iterative solver hit its cap without meeting its convergence test."""
