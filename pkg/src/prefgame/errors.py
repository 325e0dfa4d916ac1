"""Semantic exception hierarchy.

Public functions never raise bare ValueError/RuntimeError; each failure
mode has a named class so callers (and the CLI exit-code mapping) can
distinguish bad inputs from numerical breakdown.
"""


class PrefGameError(Exception):
    """Base error for this package."""


class DomainError(PrefGameError, ValueError):
    """An input violates a value-level contract (range, finiteness, structure)."""


class ShapeError(PrefGameError, ValueError):
    """Dimension or index mismatch between otherwise-valid objects."""


class DataFormatError(PrefGameError, ValueError):
    """A file or serialized payload does not match the documented schema."""


class TrainingError(PrefGameError, RuntimeError):
    """Optimization produced a non-finite loss; the message names the step."""


class GenerationError(PrefGameError, RuntimeError):
    """Rejection sampling exhausted its attempt budget."""


class StateError(PrefGameError, RuntimeError):
    """An iterate became degenerate (NaN/Inf) during a solver run."""


class OracleError(PrefGameError, RuntimeError):
    """An equilibrium oracle could not reach its tolerance.

    Carries the best policy found so far in ``best_found`` when available.
    """

    def __init__(self, message, best_found=None):
        super().__init__(message)
        self.best_found = best_found
