"""
Exception hierarchy for the front-speed toolkit.

Precondition violations raise plain ``ValueError``; the classes below cover
conditions that are specific to the numerics.
"""


class JumpSyncError(Exception):
    """Base class for toolkit errors."""


class NumericalFailure(JumpSyncError):
    """A numerical procedure could not produce a trustworthy result."""


class StabilityViolation(NumericalFailure):
    """The mean-field integrator had to clamp or reorder values beyond tolerance."""


class MassLeak(NumericalFailure):
    """The right edge of the grid no longer carries the full unit mass."""


class NonConvergence(NumericalFailure):
    """An iterative or adaptive procedure failed to resolve its target."""


class UnboundedSpeed(JumpSyncError):
    """The jump law has tail exponent 0, so the critical speed is infinite."""


class Phi0TooLarge(JumpSyncError):
    """A left-boundary wave launched from phi0 does not end at (1, 0)."""


class WindowTooShort(JumpSyncError):
    """Too few wave samples fall inside the tail-fitting window."""
