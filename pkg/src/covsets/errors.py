"""Exception hierarchy shared by every module."""


class CovsetsError(Exception):
    """Base class for all package errors."""


class ResourceError(CovsetsError):
    """A depth or size cap would be exceeded."""


class TruncationError(CovsetsError):
    """A sequence was not materialized far enough for the request."""


class UndefinedEstimateError(CovsetsError):
    """No usable data to form an estimate (e.g. every block in a window is empty)."""


class InsufficientSamplesError(CovsetsError):
    """Too few samples, or a conditioning event was never observed."""


class InsufficientDataError(CovsetsError):
    """Regression window has fewer usable points than required."""


class DegenerateTargetError(CovsetsError):
    """Target set is empty at the requested depth."""


class UnsupportedModelError(CovsetsError):
    """Dependence structure of a limsup model is not supported."""


class OutOfTheoryError(CovsetsError):
    """Inputs fall outside the range the dimension formulas cover."""


class ConfigError(CovsetsError):
    """Invalid experiment configuration; ``path`` names the offending field."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
