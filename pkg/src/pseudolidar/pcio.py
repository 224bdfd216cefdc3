"""Bit-exact codecs for point-cloud binaries, KITTI labels, PLY, and frame files.

Cloud `.bin` files are headerless little-endian 32-bit floats, point-major.
Depth maps are 16-bit grayscale PNGs (meters = raw / 256, raw 0 = invalid) or
raw `.f32` buffers with a JSON sidecar; images and masks are PNGs or raw
`.u8` buffers with the same sidecar convention.  The sidecar for ``foo.f32``
is ``foo.f32.json`` and holds ``{"width": W, "height": H}``.

Every reader/writer pair here is mutually inverse at the byte level for data
that fits the format's precision, and writers are deterministic.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from PIL import Image

from .calib import KittiCalibration, extrinsics_from_kitti, invert_extrinsics
from .errors import (
    CorruptFileError,
    InputError,
    InvalidBoxError,
    InvalidDepthError,
    LabelParseError,
    LayoutError,
)
from .painting import InstanceMaskSet, PaintedPointCloud, RgbImage
from .projection import DepthMap, PointCloud


class CloudLayout(Enum):
    """On-disk record layout of a cloud `.bin` file."""

    XYZ = "xyz"
    XYZI = "xyzi"
    XYZRGB = "xyzrgb"

    @property
    def stride(self) -> int:
        """Floats per point record."""
        return {CloudLayout.XYZ: 3, CloudLayout.XYZI: 4, CloudLayout.XYZRGB: 6}[self]

    @classmethod
    def from_string(cls, name: str) -> "CloudLayout":
        try:
            return cls(name.strip().lower())
        except ValueError:
            choices = ", ".join(m.value for m in cls)
            raise LayoutError(f"unknown cloud layout {name!r}; expected one of {choices}") from None


def write_cloud_bin(cloud: PointCloud | PaintedPointCloud, layout: CloudLayout) -> bytes:
    """Encode a cloud as little-endian float32 records.

    XYZ drops paint if present; XYZI writes intensity 0 (paint carries no
    single-channel equivalent); XYZRGB requires a painted cloud.
    """
    painted = isinstance(cloud, PaintedPointCloud)
    if layout is CloudLayout.XYZRGB:
        if not painted:
            raise LayoutError("xyzrgb layout requires a painted cloud")
        records = cloud.data
    elif layout is CloudLayout.XYZI:
        records = np.zeros((cloud.count, 4), dtype=np.float64)
        records[:, :3] = cloud.xyz
    else:
        records = cloud.xyz
    return records.astype("<f4").tobytes()


def read_cloud_bin(data: bytes, layout: CloudLayout) -> PointCloud | PaintedPointCloud:
    """Decode `.bin` bytes; returns a painted cloud only for XYZRGB.

    XYZI intensity is discarded on read (the writer always emits 0, but
    third-party files carry real values there).
    """
    record_bytes = 4 * layout.stride
    if len(data) % record_bytes != 0:
        raise CorruptFileError(
            f"cloud data length {len(data)} is not a multiple of "
            f"the {record_bytes}-byte {layout.value} record"
        )
    values = np.frombuffer(data, dtype="<f4").reshape(-1, layout.stride).astype(np.float64)
    if not np.all(np.isfinite(values)):
        raise CorruptFileError("cloud data contains non-finite values")
    if layout is CloudLayout.XYZRGB:
        paint = values[:, 3:]
        if paint.size and (paint.min() < 0.0 or paint.max() > 1.0):
            raise CorruptFileError("paint channels outside [0, 1]")
        return PaintedPointCloud(values)
    return PointCloud(values[:, :3])


def save_cloud_bin(path: str | Path, cloud: PointCloud | PaintedPointCloud, layout: CloudLayout) -> None:
    Path(path).write_bytes(write_cloud_bin(cloud, layout))


def load_cloud_bin(path: str | Path, layout: CloudLayout) -> PointCloud | PaintedPointCloud:
    return read_cloud_bin(Path(path).read_bytes(), layout)


def _wrap_angle(angle: float) -> float:
    """Wrap to [-pi, pi]."""
    wrapped = math.remainder(angle, 2.0 * math.pi)
    # remainder() returns (-pi, pi]; both ends are legal box yaws.
    return wrapped


@dataclass(frozen=True)
class Box3D:
    """A yaw-rotated 3D box plus the KITTI label bookkeeping fields.

    ``(x, y, z)`` is the label reference point (bottom-face center in
    camera-frame labels); sizes are meters; ``yaw`` is rotation about the
    frame's vertical axis in [-pi, pi].  ``score`` is None for ground truth.
    """

    label: str
    x: float
    y: float
    z: float
    height: float
    width: float
    length: float
    yaw: float
    truncation: float = 0.0
    occlusion: int = 0
    alpha: float = 0.0
    bbox: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    score: float | None = None

    def __post_init__(self) -> None:
        numeric = (self.x, self.y, self.z, self.height, self.width, self.length,
                   self.yaw, self.truncation, self.alpha, *self.bbox)
        if not all(math.isfinite(v) for v in numeric):
            raise InvalidBoxError("box fields must be finite")
        if self.height <= 0 or self.width <= 0 or self.length <= 0:
            raise InvalidBoxError(
                f"box sizes must be positive, got h={self.height} w={self.width} l={self.length}"
            )
        if not -math.pi <= self.yaw <= math.pi:
            raise InvalidBoxError(f"yaw {self.yaw} outside [-pi, pi]")
        if self.score is not None and not (
            math.isfinite(self.score) and 0.0 <= self.score <= 1.0
        ):
            raise InvalidBoxError(f"score must lie in [0, 1], got {self.score}")
        object.__setattr__(self, "bbox", tuple(float(v) for v in self.bbox))

    @property
    def bbox_height(self) -> float:
        """2D box pixel height (bottom minus top)."""
        return self.bbox[3] - self.bbox[1]


def box_camera_to_world(box: Box3D, calib: KittiCalibration) -> Box3D:
    """Re-express a camera-frame label box in the world (LiDAR) frame.

    The reference point is transformed as-is; yaw about the camera's down
    axis becomes yaw about the world's up axis (negated, quarter turn).
    Labels live in the rectified frame shared by all cameras, so no
    per-camera baseline enters here.
    """
    inverse = invert_extrinsics(extrinsics_from_kitti(calib, fold_baseline=False))
    x, y, z = (float(v) for v in inverse.transform(np.array([box.x, box.y, box.z])))
    yaw = _wrap_angle(-box.yaw - math.pi / 2.0)
    return dataclasses.replace(box, x=x, y=y, z=z, yaw=yaw)


_GT_FIELDS = 15
_PRED_FIELDS = 16


def parse_kitti_labels(text: str, calib: KittiCalibration | None = None) -> list[Box3D]:
    """Parse KITTI label lines into boxes.

    Lines carry 15 fields (ground truth) or 16 (prediction with a trailing
    score).  "DontCare" lines have no box extent and are skipped.  When
    ``calib`` is given, boxes are converted from the camera frame to the
    world frame via :func:`box_camera_to_world`.
    """
    boxes: list[Box3D] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split()
        if not tokens:
            continue
        if len(tokens) not in (_GT_FIELDS, _PRED_FIELDS):
            raise LabelParseError(
                f"label line {lineno}: expected {_GT_FIELDS} or {_PRED_FIELDS} fields, "
                f"got {len(tokens)}"
            )
        if tokens[0] == "DontCare":
            continue
        try:
            values = [float(tok) for tok in tokens[1:]]
        except ValueError as exc:
            raise LabelParseError(f"label line {lineno}: {exc}") from None
        try:
            box = Box3D(
                label=tokens[0],
                truncation=values[0],
                occlusion=int(values[1]),
                alpha=values[2],
                bbox=(values[3], values[4], values[5], values[6]),
                height=values[7],
                width=values[8],
                length=values[9],
                x=values[10],
                y=values[11],
                z=values[12],
                yaw=values[13],
                score=values[14] if len(values) == _PRED_FIELDS - 1 else None,
            )
        except InvalidBoxError as exc:
            raise LabelParseError(f"label line {lineno}: {exc}") from None
        if calib is not None:
            box = box_camera_to_world(box, calib)
        boxes.append(box)
    return boxes


def serialize_kitti_labels(boxes: list[Box3D]) -> str:
    """Serialize boxes as KITTI label lines.

    Float fields print with 6 decimal places; occlusion, an integer state,
    prints as an integer.  parse(serialize(boxes)) == boxes whenever every
    float field sits on the 1e-6 grid.
    """
    lines = []
    for box in boxes:
        fields = [
            box.label,
            f"{box.truncation:.6f}",
            str(box.occlusion),
            f"{box.alpha:.6f}",
            f"{box.bbox[0]:.6f}",
            f"{box.bbox[1]:.6f}",
            f"{box.bbox[2]:.6f}",
            f"{box.bbox[3]:.6f}",
            f"{box.height:.6f}",
            f"{box.width:.6f}",
            f"{box.length:.6f}",
            f"{box.x:.6f}",
            f"{box.y:.6f}",
            f"{box.z:.6f}",
            f"{box.yaw:.6f}",
        ]
        if box.score is not None:
            fields.append(f"{box.score:.6f}")
        lines.append(" ".join(fields))
    return "".join(line + "\n" for line in lines)


_PLY_HEADER = (
    "ply\n"
    "format binary_little_endian 1.0\n"
    "element vertex {count}\n"
    "property float x\n"
    "property float y\n"
    "property float z\n"
    "property uchar red\n"
    "property uchar green\n"
    "property uchar blue\n"
    "end_header\n"
)


def export_ply(cloud: PaintedPointCloud) -> bytes:
    """Encode a painted cloud as a binary little-endian PLY.

    Coordinates are float32; paint maps to uint8 as floor(p * 255 + 0.5).
    """
    header = _PLY_HEADER.format(count=cloud.count).encode("ascii")
    records = np.zeros(cloud.count, dtype=[("xyz", "<f4", (3,)), ("rgb", "u1", (3,))])
    records["xyz"] = cloud.xyz
    records["rgb"] = np.floor(cloud.paint * 255.0 + 0.5)
    return header + records.tobytes()


def _read_sidecar(path: Path) -> tuple[int, int]:
    """(width, height) from the raw buffer's JSON sidecar."""
    meta_path = path.with_name(path.name + ".json")
    if not meta_path.exists():
        raise CorruptFileError(f"missing sidecar {meta_path.name} for raw buffer {path.name}")
    try:
        meta = json.loads(meta_path.read_text())
        width, height = int(meta["width"]), int(meta["height"])
    except (ValueError, KeyError, TypeError) as exc:
        raise CorruptFileError(f"bad sidecar {meta_path.name}: {exc}") from None
    if width <= 0 or height <= 0:
        raise CorruptFileError(f"bad sidecar {meta_path.name}: non-positive dimensions")
    return width, height


def _write_sidecar(path: Path, width: int, height: int) -> None:
    meta_path = path.with_name(path.name + ".json")
    meta_path.write_text(json.dumps({"width": width, "height": height}) + "\n")


def _raw_pixels(path: Path, dtype: str, channels: int) -> np.ndarray:
    width, height = _read_sidecar(path)
    data = path.read_bytes()
    expected = width * height * channels * np.dtype(dtype).itemsize
    if len(data) != expected:
        raise CorruptFileError(
            f"{path.name}: expected {expected} bytes for {width}x{height}, got {len(data)}"
        )
    shape = (height, width, channels) if channels > 1 else (height, width)
    return np.frombuffer(data, dtype=dtype).reshape(shape)


def _png_pixels(path: Path) -> np.ndarray:
    try:
        with Image.open(path) as img:
            return np.asarray(img)
    except (OSError, SyntaxError) as exc:
        raise CorruptFileError(f"{path.name}: {exc}") from None


def read_depth_file(path: str | Path) -> DepthMap:
    """Load a depth map: 16-bit PNG (meters = raw / 256) or raw `.f32`."""
    path = Path(path)
    if path.suffix == ".png":
        pixels = _png_pixels(path)
        if pixels.ndim != 2:
            raise CorruptFileError(f"{path.name}: depth image must be single-channel")
        return DepthMap(pixels.astype(np.float64) / 256.0)
    if path.suffix == ".f32":
        return DepthMap(_raw_pixels(path, "<f4", 1).astype(np.float64))
    raise InputError(f"unsupported depth file suffix {path.suffix!r} (expected .png or .f32)")


def write_depth_file(path: str | Path, depth: DepthMap) -> None:
    """Write a depth map; format chosen by suffix as in :func:`read_depth_file`.

    PNG quantizes to 1/256 m steps; invalid pixels store raw 0.  Depths at
    or above the 16-bit ceiling are rejected rather than clipped.
    """
    path = Path(path)
    if path.suffix == ".png":
        raw = np.where(depth.valid_mask, np.round(depth.values * 256.0), 0.0)
        if raw.max() > 65535:
            raise InvalidDepthError("depth exceeds the 16-bit PNG range (>= 256 m)")
        Image.fromarray(raw.astype(np.uint16)).save(path)
        return
    if path.suffix == ".f32":
        _write_sidecar(path, depth.width, depth.height)
        path.write_bytes(depth.values.astype("<f4").tobytes())
        return
    raise InputError(f"unsupported depth file suffix {path.suffix!r} (expected .png or .f32)")


def read_image_file(path: str | Path) -> RgbImage:
    """Load an RGB image: PNG or raw `.u8` (H x W x 3)."""
    path = Path(path)
    if path.suffix == ".png":
        with Image.open(path) as img:
            return RgbImage(np.asarray(img.convert("RGB")))
    if path.suffix == ".u8":
        return RgbImage(_raw_pixels(path, "u1", 3))
    raise InputError(f"unsupported image file suffix {path.suffix!r} (expected .png or .u8)")


def write_image_file(path: str | Path, image: RgbImage) -> None:
    path = Path(path)
    if path.suffix == ".png":
        Image.fromarray(image.pixels, mode="RGB").save(path)
        return
    if path.suffix == ".u8":
        _write_sidecar(path, image.width, image.height)
        path.write_bytes(image.pixels.tobytes())
        return
    raise InputError(f"unsupported image file suffix {path.suffix!r} (expected .png or .u8)")


def read_mask_file(path: str | Path) -> InstanceMaskSet:
    """Load an instance-id map (0 = background): grayscale PNG or raw `.u8`."""
    path = Path(path)
    if path.suffix == ".png":
        pixels = _png_pixels(path)
        if pixels.ndim != 2:
            raise CorruptFileError(f"{path.name}: mask image must be single-channel")
        return InstanceMaskSet.from_id_map(pixels)
    if path.suffix == ".u8":
        return InstanceMaskSet.from_id_map(_raw_pixels(path, "u1", 1))
    raise InputError(f"unsupported mask file suffix {path.suffix!r} (expected .png or .u8)")


def write_mask_file(path: str | Path, masks: InstanceMaskSet) -> None:
    """Write an instance-id map; ids above 255 need the PNG format."""
    if masks.instance_ids is not None:
        ids = masks.instance_ids
    else:
        ids = masks.foreground.astype(np.uint16)
    path = Path(path)
    if path.suffix == ".png":
        if ids.max(initial=0) > 65535 or ids.min(initial=0) < 0:
            raise InputError("mask ids outside the 16-bit PNG range")
        Image.fromarray(np.ascontiguousarray(ids, dtype=np.uint16)).save(path)
        return
    if path.suffix == ".u8":
        if ids.max(initial=0) > 255 or ids.min(initial=0) < 0:
            raise InputError("mask ids outside the 8-bit raw range; use PNG")
        _write_sidecar(path, masks.width, masks.height)
        path.write_bytes(np.ascontiguousarray(ids, dtype=np.uint8).tobytes())
        return
    raise InputError(f"unsupported mask file suffix {path.suffix!r} (expected .png or .u8)")
