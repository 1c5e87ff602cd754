"""
Exception hierarchy of cgen-lab.

Every error derives from ``CGenError`` and from the closest builtin, so
callers can catch either the domain error or the generic one.
"""


class CGenError(Exception):
    """Root of every error raised by cgen-lab."""


# --- autodiff -----------------------------------------------------------------


class DimensionError(CGenError, ValueError):
    """Operand shapes do not align."""


class ConfigurationError(CGenError, ValueError):
    """Hyperparameters are inconsistent (e.g. non-integral conv extent)."""


class NonFiniteError(CGenError, FloatingPointError):
    """A forward or backward pass produced NaN or Inf."""


class TapeError(CGenError, RuntimeError):
    """The computation tape was used out of contract."""


class OptimizerStateError(CGenError, RuntimeError):
    """An update was requested without the gradients it needs."""


class InvalidLabelError(CGenError, ValueError):
    """A binary target holds a value other than 0 or 1."""


# --- models -------------------------------------------------------------------


class ModelBuildError(CGenError, ValueError):
    """A layer stack does not compose."""


class UnsupportedOperationError(CGenError, TypeError):
    """The model kind does not support the requested operation."""


class ModelNotFrozenError(CGenError, RuntimeError):
    """A model that must stay fixed still has trainable weights."""


class CheckpointIOError(CGenError, OSError):
    """The checkpoint file could not be read or written."""


class CorruptCheckpointError(CGenError, ValueError):
    """The checkpoint header or layout is malformed."""


class UnsupportedVersionError(CGenError, ValueError):
    """The checkpoint version is not understood by this release."""


class TensorLengthMismatchError(CGenError, ValueError):
    """A stored tensor does not match its declared shape."""


# --- environments -------------------------------------------------------------


class DemonstrationFailureError(CGenError, RuntimeError):
    """The scripted planner made no progress."""


class SceneExtractionError(CGenError, ValueError):
    """No valid scene could be recovered from an image."""


# --- pipeline -----------------------------------------------------------------


class MissingPrerequisiteError(CGenError, FileNotFoundError):
    """A pipeline stage needs an artifact that has not been produced yet."""


class ImageFormatError(CGenError, ValueError):
    """An image file is not a binary PGM with maxval 255."""


class EmptyDatasetError(CGenError, ValueError):
    """A training or evaluation routine received no samples."""
