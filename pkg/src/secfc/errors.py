"""Exception hierarchy shared across the package."""


class SecFCError(Exception):
    """Base class for all package errors."""

    category = "error"


class ConfigError(SecFCError, ValueError):
    category = "config"


class QuantizationError(SecFCError, ValueError):
    """A value does not fit the field after scaling."""

    category = "quantization"


class HeadroomError(ConfigError):
    """The field is too small for the worst-case coded distance."""

    category = "headroom"


class DecodeError(SecFCError, ValueError):
    category = "decode"


class ProtocolError(SecFCError, RuntimeError):
    category = "protocol"


class TranscriptError(ProtocolError):
    category = "transcript"


class DataFormatError(SecFCError, ValueError):
    """Malformed dataset input; ``row`` is 1-based and counts the header."""

    category = "data"

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
