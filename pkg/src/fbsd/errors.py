"""Exception hierarchy shared across the package.

Every error raised on a user-facing path derives from FbsdError so the
service layer can map them to HTTP 4xx responses uniformly.
"""


class FbsdError(Exception):
    """Base class for all fbsd errors."""


class InvalidArgumentError(FbsdError, ValueError):
    """Caller passed data violating a documented precondition."""


class AudioFormatError(FbsdError):
    """WAV file cannot be decoded or violates the accepted format."""


class MetricError(FbsdError):
    """Metric is undefined for the given inputs (e.g. silent reference)."""


class MixError(FbsdError):
    """SNR mixing cannot be performed (e.g. silent source)."""


class WeightFileError(FbsdError):
    """Base class for weight (de)serialization failures."""


class CorruptHeaderError(WeightFileError):
    """Magic, version field or header JSON cannot be parsed."""


class VersionMismatchError(WeightFileError):
    """File format version is not supported by this build."""


class TruncatedPayloadError(WeightFileError):
    """Tensor payload is shorter than the directory declares."""


class UnknownTensorError(WeightFileError):
    """File carries tensors the model does not define."""


class MissingTensorError(WeightFileError):
    """Model defines tensors the file does not carry."""


class ShapeMismatchError(WeightFileError):
    """A stored tensor's shape disagrees with the model configuration."""
