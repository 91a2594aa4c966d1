"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: configuration problems exit 2,
numerical failures exit 3, I/O problems exit 4.
"""


class MsglmbError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(MsglmbError):
    """Scenario or model configuration is invalid or incomplete."""


class NumericalError(MsglmbError):
    """A linear-algebra operation failed even after jitter regularization."""


class StateSpaceOverflow(MsglmbError):
    """Exhaustive enumeration was asked for an instance that is too large."""

    def __init__(self, count: int, limit: int):
        self.count = count
        self.limit = limit
        super().__init__(
            f"enumeration would visit ~{count} histories, limit is {limit}"
        )
