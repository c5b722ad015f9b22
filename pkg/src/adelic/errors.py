"""Exception types shared across the package."""

from __future__ import annotations


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition."""


class CapacityError(RuntimeError):
    """Raised when a computation would exceed a hard enumeration or term cap."""


class PoleError(ValidationError):
    """Raised when a meromorphic quantity is evaluated at one of its poles."""


class SectionZeroError(ValidationError):
    """Raised when a section vanishes at the point where a norm is needed.

    Carries the offending place in ``place`` so callers can report it.
    """

    def __init__(self, message: str, place=None):
        super().__init__(message)
        self.place = place


class QuadratureError(RuntimeError):
    """Raised when numerical integration cannot meet the requested
    tolerance.  Carries the error estimate actually achieved."""

    def __init__(self, message: str, achieved: float = float("nan")):
        super().__init__(message)
        self.achieved = achieved
