"""Exception hierarchy shared by every engine module."""


class AqtcError(Exception):
    """Base class for all engine errors."""


class ValidationError(AqtcError):
    """Input violates a documented invariant or precondition."""


class FormatError(AqtcError):
    """A file does not follow the FEATPACK / manifest layout."""


class CorruptionError(AqtcError):
    """Stored checksum does not match the file contents."""


class IoError(AqtcError):
    """Underlying I/O operation failed."""


class MissingFeatureError(AqtcError):
    """A manifest references a FEATPACK key that is not present."""

    def __init__(self, key: str, path: str | None = None):
        self.key = key
        self.path = path
        where = f" in {path}" if path else ""
        super().__init__(f"missing feature key {key!r}{where}")


class NumericalError(AqtcError):
    """A computation produced NaN or otherwise left the valid domain."""
