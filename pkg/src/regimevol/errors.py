"""Exception and warning types raised across the package."""

from __future__ import annotations


class RegimeVolError(Exception):
    """Base class for every error raised by regimevol."""


# -- series ---------------------------------------------------------------

class ParseError(RegimeVolError, ValueError):
    def __init__(self, message: str, row: int | None = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class DuplicateDate(RegimeVolError, ValueError):
    pass


class EmptySeries(RegimeVolError, ValueError):
    pass


class NonPositivePrice(RegimeVolError, ValueError):
    pass


class TooShort(RegimeVolError, ValueError):
    pass


class NoOverlap(RegimeVolError, ValueError):
    pass


class FrequencyMismatch(RegimeVolError, ValueError):
    pass


# -- diagnostics ----------------------------------------------------------

class SingularRegression(RegimeVolError, ArithmeticError):
    pass


class InvalidTrim(RegimeVolError, ValueError):
    pass


class ConstantColumn(RegimeVolError, ValueError):
    pass


# -- garch-midas ----------------------------------------------------------

class InvalidShape(RegimeVolError, ValueError):
    pass


class InsufficientHistory(RegimeVolError, ValueError):
    pass


class PositivityViolated(RegimeVolError, ValueError):
    pass


class NonStationaryParams(RegimeVolError, ValueError):
    pass


class InsufficientData(RegimeVolError, ValueError):
    pass


class NotFitted(RegimeVolError, RuntimeError):
    pass


class InvalidParams(RegimeVolError, ValueError):
    pass


# -- markov switching -----------------------------------------------------

class DegenerateDensity(RegimeVolError, ArithmeticError):
    pass


# -- quantile regression --------------------------------------------------

class InvalidTau(RegimeVolError, ValueError):
    pass


class RankDeficient(RegimeVolError, ValueError):
    pass


class TooSmallSample(RegimeVolError, ValueError):
    pass


class SingularH(RegimeVolError, ArithmeticError):
    pass


class NoIntercept(RegimeVolError, ValueError):
    pass


class TooLarge(RegimeVolError, ValueError):
    pass


# -- cli ------------------------------------------------------------------

class ConfigError(RegimeVolError, ValueError):
    """Configuration problems, collected rather than raised one at a time.

    ``errors`` is a list of ``(key, message)`` pairs.
    """

    def __init__(self, errors: list[tuple[str, str]]):
        self.errors = list(errors)
        lines = "; ".join(f"{k}: {m}" for k, m in self.errors)
        super().__init__(lines or "invalid configuration")


class StageError(RegimeVolError, RuntimeError):
    """A pipeline stage failed; ``stage`` names it and ``__cause__`` holds the original."""

    def __init__(self, stage: str, error: BaseException):
        self.stage = stage
        super().__init__(f"stage '{stage}' failed: {type(error).__name__}: {error}")


# -- warnings -------------------------------------------------------------

class ConvergenceWarning(UserWarning):
    """Optimizer stopped without meeting its tolerance; best point returned."""


class DegenerateSolution(UserWarning):
    """Quantile-regression vertex has more zero residuals than parameters."""
