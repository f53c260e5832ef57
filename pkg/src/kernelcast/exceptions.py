"""Custom exceptions for kernelcast package."""

from typing import Optional


class KernelcastError(Exception):
    """Base exception for kernelcast package."""

    pass


class ConfigurationError(KernelcastError):
    """Exception raised for configuration-related errors."""

    pass


class DataError(KernelcastError):
    """Exception raised for ingestion and dataset-construction errors."""

    pass


class ModelError(KernelcastError):
    """Exception raised for model fitting and prediction errors."""

    pass


class EvaluationError(KernelcastError):
    """Exception raised for metric and significance-test errors."""

    pass


class ReportError(KernelcastError):
    """Exception raised while writing backtest artifacts."""

    pass


# Data errors


class EmptyFile(DataError):
    """The input file holds a header but no data rows."""

    pass


class MalformedRow(DataError):
    """A CSV row could not be parsed."""

    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"Malformed row at line {line}: {reason}")


class DuplicateTimestamp(DataError):
    """The same (date, hour) appears twice with the same UTC offset."""

    def __init__(self, date, hour: int, line: Optional[int] = None):
        self.date = date
        self.hour = hour
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"Duplicate timestamp {date} hour {hour}{where}")


class GapTooLong(DataError):
    """A run of missing hours exceeds the imputation limit."""

    def __init__(self, start, length: int, max_run: int):
        self.start = start
        self.length = length
        self.max_run = max_run
        super().__init__(
            f"Gap of {length} hours starting at {start} exceeds max_run={max_run}"
        )


class SpecNotFitted(DataError):
    """A transform was applied before its statistics were learned."""

    pass


class WindowTooShort(DataError):
    """The requested window cannot produce the required lagged rows."""

    pass


class LagUnavailable(DataError):
    """A lagged day needed for a feature vector lies before the panel start."""

    pass


class InsufficientHistory(DataError):
    """The panel does not cover the backtest range plus its lead-in."""

    pass


# Model errors


class PeriodicParamsMissing(ModelError):
    """The local-periodic kernel was requested without its parameter block."""

    pass


class NotFactorizable(ModelError):
    """Cholesky failed even at the largest jitter."""

    pass


class ConstantMatrix(ModelError):
    """Min-max scaling is undefined for a constant matrix."""

    pass


class AllRestartsFailed(ModelError):
    """Every hyperparameter optimisation restart failed."""

    pass


class DimensionMismatch(ModelError):
    """Query inputs do not match the training input dimension."""

    pass


class NoConvergence(ModelError):
    """A solver stopped at its iteration limit before meeting its tolerance."""

    pass


class EmptyPiSet(ModelError):
    """No conformal candidate was accepted."""

    pass


class ScaleMismatch(ModelError):
    """Forecasts on different scales were combined."""

    pass


class InvalidInterval(ModelError):
    """An interval has lower bound above its upper bound."""

    pass


# Evaluation errors


class LengthMismatch(EvaluationError):
    """Aligned series have different lengths."""

    pass


class AllTermsSkipped(EvaluationError):
    """Every MAPE term had a near-zero true value."""

    pass


class Empty(EvaluationError):
    """An aggregate was requested over zero values."""

    pass


class ZeroVariance(EvaluationError):
    """The loss differential has zero long-run variance."""

    pass


class DegenerateRanks(EvaluationError):
    """Rank test inputs have too few models or blocks."""

    pass


# Report errors


class IoError(ReportError):
    """Writing an artifact failed."""

    pass
