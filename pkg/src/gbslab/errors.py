"""Exception hierarchy shared by all gbslab modules.

The CLI maps these onto process exit codes, so every failure raised from
library code should be one of the classes below.
"""


class GBSLabError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class ConfigError(GBSLabError, ValueError):
    """Invalid configuration, schema violation or inconsistent inputs."""

    exit_code = 2


class DigestMismatchError(ConfigError):
    """A persisted artifact was produced under a different configuration."""


class SampleFileError(ConfigError):
    """Malformed or truncated sample file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class PhysicalityError(GBSLabError, ValueError):
    """A covariance matrix or transfer matrix violates a physical constraint."""

    exit_code = 3


class ScaleError(GBSLabError):
    """A desk-scale limit (modes, memory budget) was exceeded."""

    exit_code = 4
