"""Exception hierarchy shared by every module."""

from typing import Optional


class RofuError(Exception):
    """Base class for all library errors."""


class NotPsdError(RofuError):
    """A factorization hit a non-positive pivot."""


class DegenerateUpdateError(RofuError):
    """A rank-1 update would make the design matrix singular."""


class DimensionMismatchError(RofuError, ValueError):
    """Vector or matrix shapes disagree with the declared spec."""


class EmptyDatasetError(RofuError):
    """An operation that needs data received none."""


class NonFiniteError(RofuError):
    """A loss, objective or score became NaN or infinite."""

    def __init__(self, message: str, round_index: Optional[int] = None):
        self.round_index = round_index
        if round_index is not None:
            message = f"round {round_index}: {message}"
        super().__init__(message)


class UnpulledArmError(RofuError):
    """UCB1 was asked for an arm that has never been pulled."""


class ExhaustedError(RofuError):
    """A dataset-backed environment ran out of rows."""


class DatasetParseError(RofuError):
    """A CSV cell could not be parsed."""

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        self.row = row
        self.column = column
        super().__init__(message)


class LabelOutOfRangeError(RofuError):
    """A class label falls outside [0, K)."""


class CheckpointError(RofuError):
    """A parameter checkpoint is malformed."""


class FingerprintMismatchError(RofuError):
    """Runs being aggregated do not describe the same experiment."""


class ConfigError(RofuError):
    """An experiment config failed to parse or validate."""


class PersistError(RofuError):
    """Results could not be written."""

    def __init__(self, message: str, path=None):
        self.path = path
        super().__init__(f"{message} ({path})" if path is not None else message)
