"""Error taxonomy shared across the package.

The CLI maps these onto process exit codes, so every failure path in the
library should raise one of them (or a subclass).
"""


class RegdomError(Exception):
    """Base class for package errors."""


class UsageError(RegdomError):
    """Bad input or violated precondition (exit code 2)."""


class DomainError(UsageError):
    """Query point does not lie in the open domain."""


class NumericError(RegdomError):
    """Optimizer, bracket or resampling failure (exit code 3)."""


class FocalError(NumericError):
    """An evolution step crossed a focal point."""


class CheckError(RegdomError):
    """A verification assertion did not hold (exit code 4)."""
