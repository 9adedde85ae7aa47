"""Exception types raised across the package."""


class RBMError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(RBMError, ValueError):
    """Bad shapes, out-of-range values, or malformed arguments."""


class CapacityError(RBMError):
    """Model too large for exact enumeration."""


class StateError(RBMError):
    """An object was used before it was initialized."""


class ParseError(RBMError, ValueError):
    """Malformed file content."""


class FormatError(ParseError):
    """File is not in the expected binary format."""


class LengthError(ParseError):
    """File payload is shorter than its header declares."""


class VersionError(ParseError):
    """Unsupported file format version."""
