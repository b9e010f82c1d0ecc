"""Exception types shared across the package."""


class ShapeMismatchError(ValueError):
    """An array does not have the shape an operation requires."""


class LabelError(ValueError):
    """A class label is outside [0, classes)."""


class ParameterError(ValueError):
    """A configuration value violates its documented range."""


class EmptyInputError(ValueError):
    """An operation that needs at least one element got none."""


class CorruptDatasetError(RuntimeError):
    """A dataset file is missing, truncated, or malformed."""


class TrainingDivergedError(RuntimeError):
    """Training produced a non-finite loss."""


class CorruptFileError(RuntimeError):
    """An artifact file is truncated, malformed, or has the wrong version."""


class NotFoundError(LookupError):
    """A requested model, ratio, or group is not in the registry."""
