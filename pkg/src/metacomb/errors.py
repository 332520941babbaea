"""Exception and warning types shared across the package."""

from __future__ import annotations


class MetacombError(Exception):
    """Base class for all errors raised by this package.

    The CLI maps subclasses to single-line machine-parsable codes, so the
    class name doubles as the error code.
    """

    @property
    def code(self) -> str:
        return type(self).__name__


# -- series / data errors -----------------------------------------------------

class SeriesTooShort(MetacombError):
    """Series has too few observations for the requested split."""


class InsufficientHistory(MetacombError):
    """A forecaster's minimum training-length requirement is not met."""


class SingularDesign(MetacombError):
    """A least-squares design matrix is rank deficient."""


class LengthMismatch(MetacombError):
    """Paired vectors have different lengths."""


class ShapeMismatch(MetacombError):
    """Tensor or matrix shapes are incompatible."""


class HorizonTooShort(MetacombError):
    """Horizon too short to estimate error correlations."""


# -- metric degeneracies ------------------------------------------------------

class DegenerateScale(MetacombError):
    """The in-sample scaling denominator is zero."""


class DegenerateBenchmark(MetacombError):
    """A benchmark score used as a denominator is zero."""


# -- training errors ----------------------------------------------------------

class NonFiniteLoss(MetacombError):
    """Training produced a NaN or infinite loss."""


class UntrainedModel(MetacombError):
    """Operation requires trained network parameters."""


# -- stats errors -------------------------------------------------------------

class UnsupportedK(MetacombError):
    """No tabulated critical value for this number of methods."""


# -- ingestion / persistence errors -------------------------------------------

class ParseError(MetacombError):
    """Malformed dataset row; carries 1-based row and column numbers."""

    def __init__(self, row: int, column: int, message: str):
        super().__init__(f"row {row}, column {column}: {message}")
        self.row = row
        self.column = column


class EmptySeries(MetacombError):
    """A dataset row contains an id but no observations."""


class EmptyDataset(MetacombError):
    """The dataset contains no series."""


class FrequencyMismatch(MetacombError):
    """Model and dataset frequencies disagree."""


class VersionMismatch(MetacombError):
    """Model container format version is not supported."""


class CorruptFile(MetacombError):
    """Model container failed checksum or structural validation."""


# -- warning categories (policies that recover instead of raising) ------------

class DegenerateBalanceWarning(UserWarning):
    """Both objective terms vanish; the balance weight defaults to 0.5."""


class DisconnectedGraphWarning(UserWarning):
    """A parameter does not reach the loss; its gradient is zero."""


class NotConvergedWarning(UserWarning):
    """Iterative solver hit its iteration cap before the tolerance."""
