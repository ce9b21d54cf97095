"""Exception hierarchy shared across the package."""

from __future__ import annotations


class NlkError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(NlkError):
    """A strategy or payoff array does not match the game's dimensions.

    Carries the offending player index so callers can report precisely
    which side of the game is malformed.
    """

    def __init__(self, message: str, player: int | None = None):
        super().__init__(message)
        self.player = player


class BeliefRangeError(NlkError):
    """A belief or probability parameter lies outside [0, 1]."""


class NonConvergenceError(NlkError):
    """An iterative solve failed to converge within its iteration budget.

    The last iterate and residual are attached so the failure is
    diagnosable; a partial answer is never returned silently.
    """

    def __init__(self, message: str, last_iterate=None, residual: float | None = None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual


class DataValidationError(NlkError):
    """Input data (CSV rows, counts, signals) failed validation."""


class GameFileError(NlkError):
    """A game description file could not be parsed or validated.

    ``code`` is a stable machine-readable identifier:
    ``malformed-json``, ``dimension-mismatch``, ``non-finite-payoff``,
    ``bad-schema``.
    """

    def __init__(self, message: str, code: str):
        super().__init__(message)
        self.code = code


class UnsupportedCaseError(NlkError):
    """The requested case is out of the model's analytic reach."""
