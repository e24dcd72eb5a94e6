"""Exception types shared across the package."""


class BimodError(Exception):
    """Base class for all errors raised by this package."""


class DataError(BimodError):
    """Bad input data: malformed corpus files, inconsistent labels, empty graphs."""


class UsageError(BimodError):
    """Invalid arguments or configuration."""
