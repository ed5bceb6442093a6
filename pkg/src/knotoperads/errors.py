"""Shared exception types."""


class BoundExceededError(RuntimeError):
    """Raised when a requested enumeration or computation exceeds the
    configured resource bound.  The CLI maps this to exit code 3."""
