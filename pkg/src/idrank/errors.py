"""Exception types shared across the package."""


class IdrankError(Exception):
    """Base class for all idrank failures."""


class ParseError(IdrankError):
    """A file could not be decoded under the named format."""


class ValidationError(IdrankError):
    """Decoded data violates a data-model rule; message names the rule."""


class ConfigError(IdrankError):
    """A run configuration is inconsistent or references missing data."""
