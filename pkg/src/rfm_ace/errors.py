"""Exception hierarchy. Each class maps onto one CLI exit code."""


class AceError(Exception):
    """Base class for all estimation-pipeline errors."""

    stage = "unknown"


class InvalidArgumentError(AceError, ValueError):
    stage = "argument"


class InvalidInputError(AceError, ValueError):
    """Input data that cannot be processed (e.g. non-positive power in band)."""

    stage = "input"


class ResourceLimitError(AceError, RuntimeError):
    stage = "resources"


class DegenerateBandError(AceError, ValueError):
    stage = "band-selection"


class InsufficientDataError(AceError, ValueError):
    stage = "decay-fit"


class CorruptFileError(AceError, ValueError):
    stage = "file"
