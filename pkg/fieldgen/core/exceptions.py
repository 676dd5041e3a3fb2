"""Custom exceptions for fieldgen."""


class FieldgenError(Exception):
    """Base exception for all fieldgen errors."""

    pass


# =============================================================================
# Configuration
# =============================================================================


class ConfigError(FieldgenError):
    """Config file could not be read, parsed or validated."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = path or ""
        if line is not None:
            where = f"{where}:{line}"
        super().__init__(f"{where}: {message}" if where else message)


class InvalidDirectionError(FieldgenError, ValueError):
    """Direction is not one of the eight standard 45 degree directions."""

    pass


class UnreachableTargetError(FieldgenError, ValueError):
    """Hand position lies outside the arm's reachable annulus."""

    pass


# =============================================================================
# Protocol
# =============================================================================


class ProtocolError(FieldgenError):
    """A trial schedule cannot be generated under its ordering rules."""

    pass


# =============================================================================
# Data
# =============================================================================


class DataError(FieldgenError):
    """Input data is missing, malformed or insufficient."""

    pass


class MissingDataError(DataError, LookupError):
    """A required entry is absent from a dataset."""

    pass


class MissingBaselineError(MissingDataError):
    """No baseline trajectory or baseline index for a direction."""

    pass


class MissingDirectionError(MissingDataError):
    """A generalization curve lacks one of its directions."""

    pass


class MissingGroupError(MissingDataError):
    """An inter-generalization curve lacks one of the training groups."""

    pass


class DataFormatError(DataError):
    """A CSV or JSON file does not match its schema."""

    pass


class EmptyDatasetError(DataError):
    """Nothing to analyze, fit or plot."""

    pass


class MismatchedDatasetError(DataError):
    """Fit results were computed on different datasets."""

    pass


class TooShortSeriesError(DataError):
    """Time series has too few samples to filter."""

    pass


class NoMovementError(DataError):
    """Hand speed never exceeds the movement-onset threshold."""

    pass


# =============================================================================
# Numerical
# =============================================================================


class NumericalError(FieldgenError, ArithmeticError):
    """A computation produced an unusable result."""

    pass


class IntegrationDivergenceError(NumericalError):
    """Joint velocity exceeded the divergence limit during a trial."""

    pass


class DegenerateRegressionError(NumericalError):
    """Regression predictor has (almost) no variance."""

    pass


class NonFinitePredictionError(NumericalError):
    """A model prediction is NaN or infinite."""

    pass


class SmallSampleError(NumericalError):
    """Too few observations for the small-sample AIC correction."""

    def __init__(self, message: str, aic: float):
        self.aic = aic
        super().__init__(message)
