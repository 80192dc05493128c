"""Exception hierarchy shared across the package."""


class SeqadError(Exception):
    """Base class for all seqad errors."""


class ValidationError(SeqadError, ValueError):
    """An argument or input violated a documented precondition."""


class UndefinedMetricError(SeqadError):
    """A metric was requested on inputs where it has no value (e.g. no events)."""


class EmptyCurveError(SeqadError):
    """No threshold produced any alarm, so there is no curve to build."""


class FitError(SeqadError):
    """Model fitting failed (e.g. singular design matrix)."""


class NotFittedError(SeqadError):
    """An operation requiring a fitted model was called on an unfitted one."""


class CalibrationError(SeqadError):
    """Detector calibration could not produce a usable threshold exponent."""


class DegenerateCalibrationError(CalibrationError):
    """Calibration inputs are degenerate (zero evidence spread, coincident roots)."""


class ParseError(SeqadError):
    """A data file could not be parsed; message carries row/column context."""
