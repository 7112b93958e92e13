"""Exception types shared across the package."""

from __future__ import annotations


class SizeLimitError(ValueError):
    """Raised when an object exceeds a configured desk-scale size limit."""


class InvalidNetworkError(ValueError):
    """Raised when a template or network fails structural validation."""


class SvdConvergenceError(RuntimeError):
    """Raised when the singular value decomposition fails to converge."""
