"""Exception hierarchy for the tracker.

Library code raises these; only the CLI turns them into exit codes.
"""

from typing import Optional


class TrackingError(ValueError):
    """Base class for all errors raised by the package."""

    exit_code = 3


class UsageError(TrackingError):
    """Bad command-line usage."""

    exit_code = 1


class DataError(TrackingError):
    """Input data could not be read or failed validation."""

    exit_code = 2


class ParseError(DataError):
    """A line of an input file could not be parsed."""

    def __init__(self, message: str, line: Optional[int] = None) -> None:
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InvalidBoxError(ParseError):
    """A bounding box has non-positive size or non-finite fields."""


class FrameFormatError(DataError):
    """A frame file is not an 8-bit P5 graymap or violates the Frame invariants."""


class LengthMismatchError(DataError):
    """Two inputs that must be aligned have different lengths."""


class EmptyInputError(DataError):
    """An operation received an empty input or an empty request."""


class OutOfBoundsError(DataError):
    """A box lies entirely outside the frame."""


class ScenarioConfigError(DataError):
    """A synthetic scenario cannot be generated with the given settings."""


class ConfigError(DataError):
    """A configuration file or value is invalid."""


class EstimationError(TrackingError):
    """Numerical estimation could not proceed."""

    exit_code = 3


class DegenerateBeliefError(EstimationError):
    """Predicted belief carries zero total mass."""


class TotalConflictError(EstimationError):
    """Likelihood and prior share no support, so the normalizer Z_t is zero."""


class DegeneratePatchError(EstimationError):
    """A template patch has zero intensity variance."""


class DegenerateFitError(EstimationError):
    """Data cannot support a distribution fit (e.g. all values identical)."""


class UndefinedRSquaredError(EstimationError):
    """The histogram has no spread, so R^2 is undefined."""
