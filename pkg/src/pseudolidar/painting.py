"""Point painting: attach RGB channels to cloud points inside foreground masks.

Points whose source pixel lies in the foreground mask carry that pixel's
color normalized to [0, 1]; everything else is painted (0, 0, 0).  Painting
never moves points or changes their count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidBoxError, ShapeError
from .projection import DepthMap, PixelProvenance, PointCloud


@dataclass(frozen=True, eq=False)
class RgbImage:
    """H x W x 3 image, 8-bit channels."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        px = np.array(self.pixels, dtype=np.uint8)
        if px.ndim != 3 or px.shape[2] != 3 or px.shape[0] == 0 or px.shape[1] == 0:
            raise ShapeError(f"image must be H x W x 3, got shape {px.shape}")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def normalized(self) -> np.ndarray:
        """Channels as float64 in [0, 1] (8-bit value / 255)."""
        return self.pixels.astype(np.float64) / 255.0


@dataclass(frozen=True)
class Box2D:
    """Axis-aligned 2D box given by center pixel, size in pixels, class, score."""

    center_u: float
    center_v: float
    height: float
    width: float
    label: str = "Car"
    score: float = 1.0

    def __post_init__(self) -> None:
        if self.height <= 0 or self.width <= 0:
            raise InvalidBoxError(
                f"box size must be positive, got {self.width} x {self.height}"
            )
        if not 0.0 <= self.score <= 1.0:
            raise InvalidBoxError(f"score must lie in [0, 1], got {self.score}")

    @property
    def corners(self) -> tuple[float, float, float, float]:
        """(u_min, v_min, u_max, v_max)."""
        return (
            self.center_u - self.width / 2.0,
            self.center_v - self.height / 2.0,
            self.center_u + self.width / 2.0,
            self.center_v + self.height / 2.0,
        )


@dataclass(frozen=True, eq=False)
class InstanceMaskSet:
    """Boolean foreground map, optionally with per-instance ids and prompt boxes.

    The foreground map is the union of all instance masks; instance ids are
    kept for diagnostics only.
    """

    foreground: np.ndarray
    instance_ids: np.ndarray | None = None
    boxes: tuple[Box2D, ...] | None = None

    def __post_init__(self) -> None:
        fg = np.array(self.foreground, dtype=bool)
        if fg.ndim != 2 or fg.size == 0:
            raise ShapeError(f"mask must be non-empty 2D, got shape {fg.shape}")
        fg.setflags(write=False)
        object.__setattr__(self, "foreground", fg)
        if self.instance_ids is not None:
            ids = np.array(self.instance_ids)
            if ids.shape != fg.shape:
                raise ShapeError("instance id map shape differs from foreground map")
            ids.setflags(write=False)
            object.__setattr__(self, "instance_ids", ids)

    @classmethod
    def from_id_map(cls, id_map: np.ndarray) -> "InstanceMaskSet":
        """Build from a single-channel map where 0 = background, k > 0 = instance k."""
        ids = np.asarray(id_map)
        return cls(foreground=ids > 0, instance_ids=ids.astype(np.int32))

    @property
    def height(self) -> int:
        return self.foreground.shape[0]

    @property
    def width(self) -> int:
        return self.foreground.shape[1]


@dataclass(frozen=True, eq=False)
class PaintedPointCloud:
    """N x 6 records: (x, y, z) meters plus (r, g, b) paint in [0, 1]."""

    data: np.ndarray

    def __post_init__(self) -> None:
        d = np.array(self.data, dtype=np.float64).reshape(-1, 6)
        if not np.all(np.isfinite(d)):
            raise ShapeError("painted cloud contains non-finite values")
        if d.size and (d[:, 3:].min() < 0.0 or d[:, 3:].max() > 1.0):
            raise ShapeError("paint channels must lie in [0, 1]")
        d.setflags(write=False)
        object.__setattr__(self, "data", d)

    @classmethod
    def from_parts(cls, xyz: np.ndarray, paint: np.ndarray) -> "PaintedPointCloud":
        return cls(np.column_stack([xyz, paint]))

    @property
    def xyz(self) -> np.ndarray:
        return self.data[:, :3]

    @property
    def paint(self) -> np.ndarray:
        return self.data[:, 3:]

    @property
    def count(self) -> int:
        return self.data.shape[0]


def masked_depth(depth: DepthMap, masks: InstanceMaskSet) -> DepthMap:
    """Zero out depth outside the foreground (zero encodes "no return")."""
    if (depth.height, depth.width) != (masks.height, masks.width):
        raise ShapeError(
            f"depth is {depth.width}x{depth.height} but mask is "
            f"{masks.width}x{masks.height}"
        )
    return DepthMap(np.where(masks.foreground, depth.values, 0.0))


def paint_points(
    cloud: PointCloud,
    provenance: PixelProvenance,
    image: RgbImage,
    masks: InstanceMaskSet,
) -> PaintedPointCloud:
    """Attach the source pixel's RGB to each foreground point, zeros elsewhere.

    Every point keeps its xyz bit-exactly; only the three paint channels are
    added.  A point is foreground when its provenance pixel is inside the
    mask (points only exist where depth was valid, so the masked-depth test
    reduces to the mask itself).
    """
    if provenance.count != cloud.count:
        raise ShapeError(
            f"provenance has {provenance.count} pixels for {cloud.count} points"
        )
    if (image.height, image.width) != (provenance.height, provenance.width):
        raise ShapeError(
            f"image is {image.width}x{image.height} but provenance domain is "
            f"{provenance.width}x{provenance.height}"
        )
    if (masks.height, masks.width) != (provenance.height, provenance.width):
        raise ShapeError(
            f"mask is {masks.width}x{masks.height} but provenance domain is "
            f"{provenance.width}x{provenance.height}"
        )

    us = provenance.uv[:, 0]
    vs = provenance.uv[:, 1]
    paint = np.zeros((cloud.count, 3), dtype=np.float64)
    fg = masks.foreground[vs, us]
    paint[fg] = image.pixels[vs[fg], us[fg]].astype(np.float64) / 255.0
    return PaintedPointCloud.from_parts(cloud.xyz, paint)


def boxes_to_mask_request(
    boxes: list[Box2D] | tuple[Box2D, ...], width: int, height: int
) -> str:
    """Serialize prompt boxes for an external segmentation runner.

    One line per box: ``class u_min v_min u_max v_max score`` with integer
    pixel corners and a six-decimal score.  An empty list produces an empty
    request.  A box that misses the image entirely is rejected.
    """
    lines = []
    for box in boxes:
        u_min, v_min, u_max, v_max = box.corners
        if u_max <= 0 or v_max <= 0 or u_min >= width or v_min >= height:
            raise InvalidBoxError(
                f"box {box.corners} lies outside the {width}x{height} image"
            )
        lines.append(
            f"{box.label} {round(u_min)} {round(v_min)} {round(u_max)} "
            f"{round(v_max)} {box.score:.6f}"
        )
    return "".join(line + "\n" for line in lines)
