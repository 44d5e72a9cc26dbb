"""Shared exception types.

Two failure classes cover the whole library: bad inputs at an API
boundary, and numerical poisoning (non-finite values) detected inside a
training loop. The CLI maps them to distinct exit codes.
"""


class InvalidInputError(ValueError):
    """An argument violates a documented precondition."""


class PoisonError(RuntimeError):
    """A non-finite loss, gradient, or parameter was produced; the
    surrounding loop must halt rather than continue on garbage."""
