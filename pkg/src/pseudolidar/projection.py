"""Back-projection of dense depth maps into pseudo-LiDAR point clouds.

A pixel (u, v) with depth d lifts to the camera frame as

    z_c = d,  x_c = (u - cx) * d / fx,  y_c = (v - cy) * d / fy

and the world-frame point is the inverse extrinsic transform applied to
(x_c, y_c, z_c).  Integer pixel coordinates address pixel centers.  All math
runs in 64-bit floats; clouds are quantized to 32-bit only when serialized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calib import CameraExtrinsics, CameraIntrinsics
from .errors import BehindCameraError, InvalidDepthError, ShapeError


@dataclass(frozen=True, eq=False)
class DepthMap:
    """Per-pixel depth in meters, row-major.  d > 0 means a valid return;
    zero, negative, or non-finite entries mean no return."""

    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 2 or v.size == 0:
            raise ShapeError(f"depth map must be non-empty 2D, got shape {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def valid_mask(self) -> np.ndarray:
        """Boolean (H, W) map of pixels carrying a usable depth."""
        return np.isfinite(self.values) & (self.values > 0)


@dataclass(frozen=True, eq=False)
class PointCloud:
    """N x 3 cloud of (x, y, z) coordinates in meters."""

    xyz: np.ndarray

    def __post_init__(self) -> None:
        p = np.array(self.xyz, dtype=np.float64).reshape(-1, 3)
        if not np.all(np.isfinite(p)):
            raise ShapeError("point cloud contains non-finite coordinates")
        p.setflags(write=False)
        object.__setattr__(self, "xyz", p)

    @property
    def count(self) -> int:
        return self.xyz.shape[0]


@dataclass(frozen=True, eq=False)
class PixelProvenance:
    """Source pixel (u, v) for each cloud point, plus the image domain size."""

    uv: np.ndarray
    width: int
    height: int

    def __post_init__(self) -> None:
        uv = np.array(self.uv, dtype=np.int32).reshape(-1, 2)
        if uv.size and (
            uv[:, 0].min() < 0
            or uv[:, 1].min() < 0
            or uv[:, 0].max() >= self.width
            or uv[:, 1].max() >= self.height
        ):
            raise ShapeError("provenance pixel outside image domain")
        uv.setflags(write=False)
        object.__setattr__(self, "uv", uv)

    @property
    def count(self) -> int:
        return self.uv.shape[0]


def pixel_to_camera(
    u: float, v: float, d: float, intrinsics: CameraIntrinsics
) -> tuple[float, float, float]:
    """Lift one pixel with depth d (meters) to camera-frame coordinates."""
    d = float(d)
    if not np.isfinite(d) or d <= 0:
        raise InvalidDepthError(f"depth must be positive and finite, got {d}")
    x_c = (float(u) - intrinsics.cx) * d / intrinsics.fx
    y_c = (float(v) - intrinsics.cy) * d / intrinsics.fy
    return x_c, y_c, d


def camera_to_world(point: np.ndarray, extrinsics: CameraExtrinsics) -> np.ndarray:
    """Map camera-frame point(s) to world coordinates via the inverse extrinsics."""
    p = np.asarray(point, dtype=np.float64)
    return (p - extrinsics.translation) @ extrinsics.rotation


def world_to_camera(point: np.ndarray, extrinsics: CameraExtrinsics) -> np.ndarray:
    """Map world-frame point(s) into the camera frame."""
    return extrinsics.transform(point)


def valid_pixel_provenance(depth: DepthMap) -> PixelProvenance:
    """Source pixels of the points :func:`depth_to_pseudolidar` would emit.

    Lets a later stage recover point-to-pixel correspondence from the depth
    map alone, without carrying provenance between files.
    """
    vs, us = np.nonzero(depth.valid_mask)
    return PixelProvenance(
        np.column_stack([us, vs]), width=depth.width, height=depth.height
    )


def depth_to_pseudolidar(
    depth: DepthMap,
    intrinsics: CameraIntrinsics,
    extrinsics: CameraExtrinsics,
) -> tuple[PointCloud, PixelProvenance]:
    """Back-project every valid-depth pixel into a world-frame cloud.

    Pixels are scanned row-major (v outer, u inner) and produce exactly one
    point each, so the output is deterministic and the provenance lists the
    source pixel of every point in emission order.  An all-invalid map yields
    an empty cloud.
    """
    mask = depth.valid_mask
    vs, us = np.nonzero(mask)
    d = depth.values[vs, us]

    x_c = (us - intrinsics.cx) * d / intrinsics.fx
    y_c = (vs - intrinsics.cy) * d / intrinsics.fy
    cam = np.column_stack([x_c, y_c, d])
    world = camera_to_world(cam, extrinsics)

    cloud = PointCloud(world)
    provenance = PixelProvenance(
        np.column_stack([us, vs]), width=depth.width, height=depth.height
    )
    return cloud, provenance


def reproject(
    point: np.ndarray,
    intrinsics: CameraIntrinsics,
    extrinsics: CameraExtrinsics,
) -> tuple[float, float, float]:
    """Project a world-frame point back to (u, v, d); inverse of the forward chain."""
    x_c, y_c, z_c = world_to_camera(np.asarray(point, dtype=np.float64), extrinsics)
    if z_c <= 0:
        raise BehindCameraError(f"point has non-positive camera depth {z_c}")
    u = intrinsics.fx * x_c / z_c + intrinsics.cx
    v = intrinsics.fy * y_c / z_c + intrinsics.cy
    return float(u), float(v), float(z_c)
