"""Exception types shared across the package."""

from __future__ import annotations


class GraphInputError(ValueError):
    """Malformed or invalid graph / weight input.

    ``line`` is the 1-based line number of the offending record when the
    error comes from a text stream.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DisconnectedGraphError(ValueError):
    """Operation requires a connected graph."""


class TooLargeError(ValueError):
    """Dense computation requested above the configured node cap."""


class ConvergenceError(RuntimeError):
    """Iterative eigensolver failed to reach the requested residual."""

    def __init__(self, message: str, residuals=None):
        super().__init__(message)
        self.residuals = residuals
