"""Request/response models for the HTTP service.

Bulk numeric payloads travel as base64 of the exact on-disk encodings:
clouds are `.bin` bytes (little-endian float32 records), depth buffers are
row-major little-endian float32, images and masks are row-major uint8.
Because the wire format IS the file format, a service response is
byte-identical to the matching CLI output file.
"""

from __future__ import annotations

import base64
import binascii

import numpy as np
from pydantic import BaseModel, ConfigDict

from ..errors import InputError
from ..painting import InstanceMaskSet, RgbImage
from ..pcio import Box3D
from ..projection import DepthMap


def decode_base64(field: str, data: str) -> bytes:
    try:
        return base64.b64decode(data, validate=True)
    except binascii.Error as exc:
        raise InputError(f"{field}: invalid base64: {exc}") from None


def encode_base64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DepthPayload(_Model):
    """Row-major float32 depth buffer; non-positive values are invalid."""

    data: str
    width: int
    height: int

    def to_depth_map(self) -> DepthMap:
        raw = decode_base64("depth.data", self.data)
        expected = self.width * self.height * 4
        if len(raw) != expected:
            raise InputError(
                f"depth.data holds {len(raw)} bytes, expected {expected} "
                f"for {self.width}x{self.height} float32"
            )
        values = np.frombuffer(raw, dtype="<f4").reshape(self.height, self.width)
        return DepthMap(values.astype(np.float64))


class ImagePayload(_Model):
    """Row-major uint8 RGB buffer (H x W x 3)."""

    data: str
    width: int
    height: int

    def to_image(self) -> RgbImage:
        raw = decode_base64("image.data", self.data)
        expected = self.width * self.height * 3
        if len(raw) != expected:
            raise InputError(
                f"image.data holds {len(raw)} bytes, expected {expected} "
                f"for {self.width}x{self.height} rgb"
            )
        pixels = np.frombuffer(raw, dtype=np.uint8).reshape(self.height, self.width, 3)
        return RgbImage(pixels)


class MaskPayload(_Model):
    """Row-major uint8 instance-id buffer (0 = background)."""

    data: str
    width: int
    height: int

    def to_masks(self) -> InstanceMaskSet:
        raw = decode_base64("mask.data", self.data)
        expected = self.width * self.height
        if len(raw) != expected:
            raise InputError(
                f"mask.data holds {len(raw)} bytes, expected {expected} "
                f"for {self.width}x{self.height} ids"
            )
        ids = np.frombuffer(raw, dtype=np.uint8).reshape(self.height, self.width)
        return InstanceMaskSet.from_id_map(ids)


class ProjectRequest(_Model):
    depth: DepthPayload
    calib: str  # calibration file text
    layout: str = "xyz"


class CloudResponse(_Model):
    cloud: str  # base64 `.bin` bytes
    layout: str
    count: int


class PaintRequest(_Model):
    cloud: str
    layout: str = "xyz"
    depth: DepthPayload
    image: ImagePayload
    mask: MaskPayload | None = None


class SparsifyOverrides(_Model):
    """Optional knobs; unset fields follow the preset, as with CLI flags."""

    preset: str | None = None
    seed: int | None = None
    spherical_voxel: tuple[float, float, float] | None = None
    x_range: tuple[float, float] | None = None
    y_range: tuple[float, float] | None = None
    z_range: tuple[float, float] | None = None
    voxel_size: tuple[float, float, float] | None = None
    max_points_per_voxel: int | None = None


class SparsifyReport(_Model):
    input: int
    denoised: int
    filtered: int
    output: int


class SparsifyRequest(_Model):
    cloud: str
    layout: str = "xyzrgb"
    output_layout: str | None = None  # defaults to the input layout
    config: SparsifyOverrides | None = None


class SparsifyResponse(CloudResponse):
    report: SparsifyReport


class BoxModel(_Model):
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

    def to_box(self) -> Box3D:
        return Box3D(
            label=self.label, x=self.x, y=self.y, z=self.z,
            height=self.height, width=self.width, length=self.length,
            yaw=self.yaw, truncation=self.truncation, occlusion=self.occlusion,
            alpha=self.alpha, bbox=self.bbox, score=self.score,
        )


class IouRequest(_Model):
    a: BoxModel
    b: BoxModel
    mode: str = "3d"  # 3d | bev
    frame: str = "camera"  # camera | world


class IouResponse(_Model):
    iou: float


class FrameBoxes(_Model):
    frame_id: str
    boxes: list[BoxModel]


class EvalConfigModel(_Model):
    class_label: str = "Car"
    mode: str = "3d"
    iou_threshold: float = 0.7
    difficulty: str = "moderate"
    frame: str = "camera"
    use_dont_care: bool = True


class Ap40Request(_Model):
    predictions: list[FrameBoxes]
    ground_truths: list[FrameBoxes]
    config: EvalConfigModel = EvalConfigModel()


class Ap40Response(_Model):
    ap: float
    recalls: list[float]
    precisions: list[float]
    gt_count: int


class HealthResponse(_Model):
    status: str
    version: str
