"""Exception types shared across the package."""


class C2mError(Exception):
    """Base class for all errors raised by this package."""


class ShapeMismatchError(C2mError):
    """Operands or parameters with incompatible shapes."""


class NonFiniteError(C2mError):
    """A NaN or infinity appeared where model state must stay finite."""


class DataFormatError(C2mError):
    """A dataset file or manifest could not be parsed."""


class CheckpointError(C2mError):
    """Base class for model checkpoint problems."""


class CheckpointVersionError(CheckpointError):
    """Checkpoint written by an incompatible format version."""


class CheckpointCorruptError(CheckpointError):
    """Checkpoint file is truncated or not valid JSON."""
