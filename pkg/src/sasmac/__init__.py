"""Numerical workbench for the strongly asynchronous slotted massive access channel."""

__version__ = "0.1.0"


class GuardError(RuntimeError):
    """A desk-scale size guard was violated (e.g. exhaustive search too large)."""
