"""Exception hierarchy shared across the package.

CLI exit-code mapping: UsageError -> 1, SchemaError / ShapeError /
MissingSampleError / CheckpointError -> 2, NumericError and anything
unexpected -> 3.
"""


class MaskEditError(Exception):
    """Base class for all package errors."""


class SchemaError(MaskEditError):
    """A mask or label violates the active label schema."""


class ShapeError(MaskEditError):
    """An array has the wrong spatial size or channel count."""


class AlignmentError(MaskEditError):
    """Landmark configuration is degenerate; no similarity fit exists."""


class MissingSampleError(MaskEditError, KeyError):
    """An edit request references a sample id that does not exist."""


class CheckpointError(MaskEditError):
    """A checkpoint is corrupt or incompatible with the requested spec."""


class NumericError(MaskEditError):
    """A loss or metric became non-finite."""
