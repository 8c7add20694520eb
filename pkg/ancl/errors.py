"""Exception hierarchy for ANCL.

Library code raises these; only the CLI turns them into exit codes.
``ValidationError`` subclasses map to exit code 1, ``RuntimeFailure``
subclasses to exit code 2.
"""


class AnclError(Exception):
    """Base class for all ANCL errors."""


class ValidationError(AnclError, ValueError):
    """Invalid input, configuration or data."""


class RuntimeFailure(AnclError):
    """Failure while doing otherwise valid work."""


# numgrad

class ShapeMismatchError(ValidationError):
    """Operand shapes are incompatible for the requested operation."""


class DomainError(RuntimeFailure):
    """A primitive was evaluated outside its domain or produced non-finite values."""


class NonScalarLossError(ValidationError):
    """backward() was called on a tensor with more than one element."""


class TapeConsumedError(RuntimeFailure):
    """The tape was already used for a backward pass."""


# anatomy

class EmptyTableError(ValidationError):
    """A ROI table holds no subjects."""


class AtlasMismatchError(ValidationError):
    """Descriptors or statistics come from a different atlas or measure set."""


class UnknownSubjectError(ValidationError, KeyError):
    """A subject id is not present in the table."""

    def __str__(self) -> str:
        return Exception.__str__(self)


class ZeroVectorError(ValidationError):
    """Cosine similarity was requested on an all-zero vector."""


class DimensionMismatchError(ValidationError):
    """Descriptor sets or feature vectors have different dimensions."""


class MissingEntriesError(ValidationError):
    """A ROI table file lacks some (subject, roi, measure) combinations."""


# losses

class DegenerateAnchorError(ValidationError):
    """An anchor has zero total weight towards the other batch members."""


class NotUnitNormError(ValidationError):
    """Embedding rows are off the unit sphere, so inner products are not cosines."""


class LengthMismatchError(ValidationError):
    """Paired vectors have different lengths."""


# model

class NanLossError(RuntimeFailure):
    """Training produced a non-finite loss."""


class MissingDegreesError(ValidationError):
    """The loss variant needs data (ROI table) that the cohort lacks."""


class CheckpointIOError(RuntimeFailure):
    """A checkpoint could not be read or written."""


class VersionMismatchError(RuntimeFailure):
    """A checkpoint was written with an unsupported format version."""


class CorruptFileError(RuntimeFailure):
    """A checkpoint failed magic, length or checksum validation."""


# cohort

class MissingFileError(ValidationError):
    """A required input file does not exist."""


class IdMismatchError(ValidationError):
    """Subject ids do not line up across cohort files."""


class MalformedRowError(ValidationError):
    """A CSV row could not be parsed."""

    def __init__(self, path, line: int, reason: str):
        self.path = path
        self.line = line
        self.reason = reason
        super().__init__(f"{path}:{line}: {reason}")


class WidthMismatchError(ValidationError):
    """An embedding file has an unexpected number of columns."""


class LabelMissingError(ValidationError):
    """The requested label column does not exist."""


# probe

class SingularSystemError(RuntimeFailure):
    """The unregularized normal equations are singular."""


class SingleClassError(ValidationError):
    """A binary task presented only one class."""


# config / cli

class InvalidConfigError(ValidationError):
    """Configuration failed validation."""

    def __init__(self, key: str, reason: str):
        self.key = key
        self.reason = reason
        super().__init__(f"{key}: {reason}")


class UnknownKeyError(InvalidConfigError):
    """The config file contains a key that is not documented."""


class ConfigTypeError(InvalidConfigError):
    """A config value has the wrong type or range."""


class MissingRequiredError(InvalidConfigError):
    """A required option was not provided."""


class UnknownCommandError(ValidationError):
    """The CLI was asked for a command it does not know."""


class GradcheckFailure(RuntimeFailure):
    """A loss variant failed the finite-difference gradient check."""
