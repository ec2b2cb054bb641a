"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: configuration problems exit 2, data
problems exit 3, anything else (including genuine bugs) exits 4.
"""


class TradelensError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(TradelensError):
    """Invalid configuration: bad architecture, out-of-range parameter, missing key."""


class DataError(TradelensError):
    """Invalid input data: malformed CSV, too few rows, broken checkpoint."""


class CheckpointError(DataError):
    """Checkpoint file cannot be read: bad magic, unknown version, checksum mismatch."""
