"""Shared exception types."""


class OvharError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(OvharError):
    """Tensor extents do not match what an operation requires."""

    def __init__(self, message, expected=None, actual=None):
        if expected is not None or actual is not None:
            message = f"{message} (expected {expected}, actual {actual})"
        super().__init__(message)
        self.expected = expected
        self.actual = actual


class FormatError(OvharError):
    """A serialized artifact (checkpoint, table, manifest, data file) is malformed.

    ``offset`` is the byte offset at which parsing failed, when known.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ManifestError(OvharError):
    """A dataset manifest or one of its records is invalid."""


class LexiconError(OvharError):
    """A lexicon entry is missing, duplicated, or unresolvable."""


class ConfigError(OvharError):
    """A run configuration or CLI invocation is unusable."""


class TrainingDiverged(OvharError):
    """Non-finite loss encountered during training."""

    def __init__(self, epoch, batch, lr):
        super().__init__(
            f"non-finite loss at epoch {epoch}, batch {batch}, lr {lr:.3e}"
        )
        self.epoch = epoch
        self.batch = batch
        self.lr = lr


class DecodeError(OvharError):
    """Similarity lookup cannot produce a prediction."""


class ClientError(OvharError):
    """An external text client (inversion or class mapping) failed."""
