"""Exception types raised across the pipeline."""


class GridIDSError(Exception):
    """Base class for all package errors."""


class MissingColumn(GridIDSError, KeyError):
    pass


class LabelParse(GridIDSError, ValueError):
    pass


class EmptyFile(GridIDSError, ValueError):
    pass


class AllMissingColumn(GridIDSError, ValueError):
    pass


class EmptyResult(GridIDSError, ValueError):
    pass


class ClassTooSmall(GridIDSError, ValueError):
    pass


class UnknownLabel(GridIDSError, ValueError):
    pass


class UnknownFeature(GridIDSError, KeyError):
    pass


class OutputNameCollision(GridIDSError, ValueError):
    pass


class NotEnoughNeighbors(GridIDSError, ValueError):
    pass


class DimensionMismatch(GridIDSError, ValueError):
    pass


class LengthMismatch(GridIDSError, ValueError):
    pass


class MissingSection(GridIDSError, KeyError):
    pass


class ConfigError(GridIDSError, ValueError):
    pass


class StageError(GridIDSError):
    """Wraps a failure inside a pipeline stage; ``stage`` names where it happened."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
