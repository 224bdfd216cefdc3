"""Pinhole camera model, rigid transforms, and KITTI calibration file parsing.

Conventions used throughout the package:

* ``CameraExtrinsics`` is the world-to-camera rigid transform: a camera-frame
  point is ``R @ p_world + t``.  Its inverse (``invert_extrinsics``) maps
  camera-frame points back to world coordinates.
* "World" means the KITTI LiDAR (velodyne) frame when the extrinsics come
  from a KITTI calibration file, so generated clouds line up with standard
  ``.bin`` consumers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CalibParseError, InvalidCalibrationError

# Published KITTI calibrations carry truncated decimals, so rectification
# matrices read from files get a looser orthogonality tolerance than
# rotations constructed in code.
PARSED_ROTATION_ATOL = 1e-4
CONSTRUCTED_ROTATION_ATOL = 1e-6


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics: per-axis focal lengths and principal point, in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self) -> None:
        for name in ("fx", "fy", "cx", "cy"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidCalibrationError(f"intrinsics field {name} is not finite")
        if self.fx <= 0 or self.fy <= 0:
            raise InvalidCalibrationError(
                f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}"
            )


@dataclass(frozen=True, eq=False)
class CameraExtrinsics:
    """World-to-camera rigid transform (rotation matrix and translation, meters)."""

    rotation: np.ndarray
    translation: np.ndarray
    atol: float = field(default=CONSTRUCTED_ROTATION_ATOL, compare=False)

    def __post_init__(self) -> None:
        r = np.array(self.rotation, dtype=np.float64).reshape(3, 3)
        t = np.array(self.translation, dtype=np.float64).reshape(3)
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(t))):
            raise InvalidCalibrationError("extrinsics contain non-finite values")
        if not np.allclose(r @ r.T, np.eye(3), atol=self.atol, rtol=0.0):
            raise InvalidCalibrationError("rotation is not orthogonal")
        if abs(np.linalg.det(r) - 1.0) > self.atol:
            raise InvalidCalibrationError("rotation determinant is not +1")
        r.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @property
    def matrix(self) -> np.ndarray:
        """The 4x4 homogeneous transform; last row is exactly (0, 0, 0, 1)."""
        m = np.eye(4, dtype=np.float64)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def transform(self, points: np.ndarray) -> np.ndarray:
        """Apply the transform to one point (3,) or a batch (N, 3)."""
        p = np.asarray(points, dtype=np.float64)
        return p @ self.rotation.T + self.translation


@dataclass(frozen=True, eq=False)
class KittiCalibration:
    """Matrices from a KITTI-style calibration file.

    ``p2`` (3x4 camera-2 projection) is mandatory; ``r0_rect`` (3x3) and
    ``tr_velo_to_cam`` (3x4) may be absent if nothing downstream needs them.
    """

    p2: np.ndarray
    r0_rect: np.ndarray | None = None
    tr_velo_to_cam: np.ndarray | None = None

    def __post_init__(self) -> None:
        p2 = _frozen_matrix(self.p2, (3, 4), "P2")
        object.__setattr__(self, "p2", p2)
        if self.r0_rect is not None:
            r0 = _frozen_matrix(self.r0_rect, (3, 3), "R0_rect")
            if not np.allclose(r0 @ r0.T, np.eye(3), atol=PARSED_ROTATION_ATOL, rtol=0.0):
                raise InvalidCalibrationError("R0_rect is not orthogonal")
            object.__setattr__(self, "r0_rect", r0)
        if self.tr_velo_to_cam is not None:
            tr = _frozen_matrix(self.tr_velo_to_cam, (3, 4), "Tr_velo_to_cam")
            object.__setattr__(self, "tr_velo_to_cam", tr)


def _frozen_matrix(value: np.ndarray, shape: tuple[int, int], name: str) -> np.ndarray:
    m = np.array(value, dtype=np.float64).reshape(shape)
    if not np.all(np.isfinite(m)):
        raise InvalidCalibrationError(f"{name} contains non-finite values")
    m.setflags(write=False)
    return m


_CALIB_KEYS = {"P2": 12, "R0_rect": 9, "Tr_velo_to_cam": 12}


def parse_kitti_calib(text: str) -> KittiCalibration:
    """Parse KITTI calibration text ("KEY: v1 v2 ..." lines, row-major values).

    Unknown keys (P0, P1, Tr_imu_to_velo, ...) are ignored.  P2 is required;
    R0_rect and Tr_velo_to_cam are kept when present.
    """
    values: dict[str, list[float]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if ":" not in line:
            raise CalibParseError(f"line {lineno}: expected 'KEY: values', got {line!r}")
        key, _, rest = line.partition(":")
        key = key.strip()
        if key not in _CALIB_KEYS:
            continue
        try:
            row = [float(tok) for tok in rest.split()]
        except ValueError as exc:
            raise CalibParseError(f"key {key}: non-numeric value ({exc})") from None
        if len(row) != _CALIB_KEYS[key]:
            raise CalibParseError(
                f"key {key}: expected {_CALIB_KEYS[key]} values, got {len(row)}"
            )
        values[key] = row

    if "P2" not in values:
        raise CalibParseError("missing key P2")
    p2 = np.array(values["P2"]).reshape(3, 4)
    r0 = np.array(values["R0_rect"]).reshape(3, 3) if "R0_rect" in values else None
    tr = (
        np.array(values["Tr_velo_to_cam"]).reshape(3, 4)
        if "Tr_velo_to_cam" in values
        else None
    )
    return KittiCalibration(p2=p2, r0_rect=r0, tr_velo_to_cam=tr)


def serialize_kitti_calib(calib: KittiCalibration) -> str:
    """Inverse of :func:`parse_kitti_calib`; floats printed at full precision
    so finite values round-trip bit-exactly."""
    lines = [_calib_line("P2", calib.p2)]
    if calib.r0_rect is not None:
        lines.append(_calib_line("R0_rect", calib.r0_rect))
    if calib.tr_velo_to_cam is not None:
        lines.append(_calib_line("Tr_velo_to_cam", calib.tr_velo_to_cam))
    return "\n".join(lines) + "\n"


def _calib_line(key: str, matrix: np.ndarray) -> str:
    return f"{key}: " + " ".join(repr(float(v)) for v in matrix.ravel())


def intrinsics_from_p2(calib: KittiCalibration) -> CameraIntrinsics:
    """Extract pinhole intrinsics from the camera-2 projection matrix."""
    p2 = calib.p2
    return CameraIntrinsics(fx=p2[0, 0], fy=p2[1, 1], cx=p2[0, 2], cy=p2[1, 2])


def extrinsics_from_kitti(
    calib: KittiCalibration, fold_baseline: bool = True
) -> CameraExtrinsics:
    """Build the velodyne-to-camera extrinsics ``R0_rect @ Tr_velo_to_cam``.

    With ``fold_baseline`` the camera-2 horizontal offset is absorbed into the
    transform (camera-frame x picks up ``P2[0,3] / fx``), so that inverting the
    result lands back-projected points in the true velodyne frame instead of
    one shifted by the stereo baseline.
    """
    if calib.r0_rect is None:
        raise InvalidCalibrationError("missing key R0_rect")
    if calib.tr_velo_to_cam is None:
        raise InvalidCalibrationError("missing key Tr_velo_to_cam")
    r0 = calib.r0_rect
    rotation = r0 @ calib.tr_velo_to_cam[:, :3]
    translation = r0 @ calib.tr_velo_to_cam[:, 3]
    if fold_baseline:
        fx = calib.p2[0, 0]
        if fx <= 0:
            raise InvalidCalibrationError("P2[0,0] must be positive to fold baseline")
        translation = translation + np.array([calib.p2[0, 3] / fx, 0.0, 0.0])
    return CameraExtrinsics(rotation, translation, atol=PARSED_ROTATION_ATOL)


def invert_extrinsics(extrinsics: CameraExtrinsics) -> CameraExtrinsics:
    """Analytic rigid-transform inverse ``(R^T, -R^T t)``."""
    r_inv = extrinsics.rotation.T
    t_inv = -r_inv @ extrinsics.translation
    return CameraExtrinsics(r_inv, t_inv, atol=extrinsics.atol)
