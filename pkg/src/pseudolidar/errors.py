"""Exception types raised across the package."""


class PseudoLidarError(Exception):
    """Base class for all errors raised by this package."""


class CalibParseError(PseudoLidarError, ValueError):
    """Calibration text could not be parsed (names the offending key)."""


class InvalidCalibrationError(PseudoLidarError, ValueError):
    """Parsed calibration violates a camera-model invariant."""


class InvalidDepthError(PseudoLidarError, ValueError):
    """Depth value is non-positive or non-finite where a valid one is required."""


class BehindCameraError(PseudoLidarError, ValueError):
    """Point projects to non-positive camera-frame depth."""


class UndefinedDirectionError(PseudoLidarError, ValueError):
    """Spherical direction is undefined (point at the origin)."""


class ShapeError(PseudoLidarError, ValueError):
    """Array dimensions disagree between paired inputs."""


class InvalidBoxError(PseudoLidarError, ValueError):
    """Box fields violate an invariant (degenerate size, outside image)."""


class LayoutError(PseudoLidarError, ValueError):
    """Requested point-record layout is incompatible with the cloud type."""


class CorruptFileError(PseudoLidarError, ValueError):
    """Binary file length or header is inconsistent with its layout."""


class LabelParseError(PseudoLidarError, ValueError):
    """KITTI label line has the wrong field count or a bad value."""


class InputError(PseudoLidarError, ValueError):
    """Structurally invalid evaluation input (duplicate frame ids, missing score)."""
