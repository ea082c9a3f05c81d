"""Exception hierarchy shared across the workbench.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
DivergenceError -> 4.
"""


class NoisyMTError(Exception):
    """Base class for all workbench errors."""


class ConfigError(NoisyMTError):
    """Invalid or inconsistent configuration."""


class DataError(NoisyMTError):
    """Malformed, missing, or inconsistent data resources."""


class DivergenceError(NoisyMTError):
    """Training produced a non-finite loss."""

    def __init__(self, step: int, message: str = ""):
        self.step = step
        super().__init__(message or f"non-finite loss at step {step}")
