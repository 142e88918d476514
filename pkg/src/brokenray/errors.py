"""Exception types raised by the toolkit."""


class BrokenRayError(Exception):
    """Base class for all toolkit errors."""


class GrazingIncidence(BrokenRayError):
    """Incoming direction is tangential to the reflecting face."""


class CornerPoint(BrokenRayError):
    """Surface normal requested at (or too close to) a polygon vertex."""


class Blocked(BrokenRayError):
    """Chord between two stations passes through the obstacle."""


class DegenerateRay(BrokenRayError):
    """Transmitter and receiver coincide."""


class NotVisible(BrokenRayError):
    """Obstacle-boundary point is hidden from the transmitter."""


class BackFacing(BrokenRayError):
    """Transmitter lies behind the face containing the reflection point."""


class ExhaustedCandidates(BrokenRayError):
    """Rejection sampling could not produce the requested number of rays."""


class EmptyRow(BrokenRayError):
    """All of a ray's intersection weight fell on masked cells."""


class AllRaysEmpty(BrokenRayError):
    """No ray in the set produced a usable matrix row."""


class DimensionMismatch(BrokenRayError):
    """Vector length does not match the number of grid cells."""


class ZeroRow(BrokenRayError):
    """Row with zero normal vector reached the solver."""


class EmptyRegion(BrokenRayError):
    """No reconstruction cells exist between boundary and obstacle."""


class IoFailure(BrokenRayError):
    """Image or report file could not be written."""


class ConfigError(BrokenRayError):
    """Experiment configuration is malformed or violates an invariant."""


class ZDependentObstacle(BrokenRayError):
    """Slice cross-sections differ, so plane cuts do not decouple."""


class SliceFailure(BrokenRayError):
    """A per-slice reconstruction failed; carries the offending z."""

    def __init__(self, z: float, cause: Exception):
        super().__init__(f"slice z={z!r} failed: {cause}")
        self.z = z
        self.cause = cause
