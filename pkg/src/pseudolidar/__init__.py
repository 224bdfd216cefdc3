"""Monocular depth maps to sparse painted point clouds, plus KITTI-style eval.

The package is organized as small pure modules:

- :mod:`pseudolidar.calib`: pinhole camera model and KITTI calibration files.
- :mod:`pseudolidar.projection`: depth-map back-projection and reprojection.
- :mod:`pseudolidar.painting`: instance-mask color painting of clouds.
- :mod:`pseudolidar.sparsify`: three-stage cloud sparsification.
- :mod:`pseudolidar.pcio`: bit-exact file codecs (`.bin`, labels, PLY, frames).
- :mod:`pseudolidar.metrics`: rotated-box IoU and AP at 40 recall positions.
- :mod:`pseudolidar.config` / :mod:`pseudolidar.pipeline`: batch runs.
- :mod:`pseudolidar.cli`: the `pseudolidar` command.
- :mod:`pseudolidar.server`: HTTP service exposing the same operations.
"""

from .calib import (
    CameraExtrinsics,
    CameraIntrinsics,
    KittiCalibration,
    extrinsics_from_kitti,
    intrinsics_from_p2,
    invert_extrinsics,
    parse_kitti_calib,
    serialize_kitti_calib,
)
from .config import PRESETS, PipelineConfig, config_to_text, parse_config_text, resolve_config
from .errors import (
    BehindCameraError,
    CalibParseError,
    CorruptFileError,
    InputError,
    InvalidBoxError,
    InvalidCalibrationError,
    InvalidDepthError,
    LabelParseError,
    LayoutError,
    PseudoLidarError,
    ShapeError,
    UndefinedDirectionError,
)
from .metrics import (
    BoxFrame,
    Difficulty,
    EvalConfig,
    EvalMode,
    PrCurve,
    ap40,
    assign_difficulty,
    bev_iou,
    evaluate_directories,
    iou_3d,
)
from .painting import (
    Box2D,
    InstanceMaskSet,
    PaintedPointCloud,
    RgbImage,
    boxes_to_mask_request,
    masked_depth,
    paint_points,
)
from .pcio import (
    Box3D,
    CloudLayout,
    box_camera_to_world,
    export_ply,
    load_cloud_bin,
    parse_kitti_labels,
    read_cloud_bin,
    read_depth_file,
    read_image_file,
    read_mask_file,
    save_cloud_bin,
    serialize_kitti_labels,
    write_cloud_bin,
    write_depth_file,
    write_image_file,
    write_mask_file,
)
from .pipeline import (
    FrameResult,
    SplitResult,
    discover_frames,
    paint_file,
    process_frame,
    project_file,
    run_split,
    sparsify_file,
)
from .projection import (
    DepthMap,
    PixelProvenance,
    PointCloud,
    camera_to_world,
    depth_to_pseudolidar,
    pixel_to_camera,
    reproject,
    valid_pixel_provenance,
    world_to_camera,
)
from .sparsify import (
    SparseCloudReport,
    SparsifyConfig,
    range_filter,
    sparsify,
    spherical_denoise,
    to_spherical,
    voxel_downsample,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
