"""Exception hierarchy shared across the package.

Everything derives from SoftshellError so callers (notably the CLI) can
distinguish domain failures from programming errors.
"""


class SoftshellError(Exception):
    """Base class for all domain errors raised by this package."""


class ShapeError(SoftshellError):
    """Invalid tensor shape or a shape mismatch between operands."""


class ParameterError(SoftshellError):
    """An argument violates an operation's precondition."""


class LabelError(SoftshellError):
    """A class label is outside the valid range."""


class ContractError(SoftshellError):
    """An input violates a documented value contract (e.g. rows not normalized)."""


class DecodeError(SoftshellError):
    """Malformed or truncated image data.

    `offset` is the byte position at which decoding failed, when known.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)
        self.offset = offset


class UnsupportedFormatError(DecodeError):
    """The image is syntactically valid but uses an unsupported variant."""


class BoundsError(SoftshellError):
    """A rectangle or index falls outside the image."""


class DatasetLayoutError(SoftshellError):
    """The dataset root does not have the expected class folders."""


class EmptyClassError(SoftshellError):
    """A class folder contains no usable images."""


class InsufficientDataError(SoftshellError):
    """Too few samples to satisfy a split or augmentation request."""


class ConfigError(SoftshellError):
    """A model configuration does not shape-check."""


class ArtifactError(SoftshellError):
    """A model artifact file is corrupt (bad magic, truncation, bad checksum)."""


class ChecksumError(ArtifactError):
    """The artifact's parameter blob fails its checksum."""


class FormatError(ArtifactError):
    """The artifact parses but its contents are inconsistent."""


class TrainingDivergedError(SoftshellError):
    """The training loss became non-finite."""

    def __init__(self, message, epoch=None, batch=None):
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch
