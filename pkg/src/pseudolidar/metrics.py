"""Rotated-box overlap and detection AP sampled at 40 recall positions.

Boxes are matched in their label frame.  In the camera frame the ground
plane is (x, z), the vertical axis is y pointing down, and the reference
point sits on the bottom face, so a box spans [y - h, y] vertically.  In
the world frame the ground plane is (x, y), z points up, and the box spans
[z, z + h].  Ground-truth boxes parsed without a calibration are camera
frame; boxes converted via a calibration are world frame.

Matching follows the classic single-camera benchmark protocol: within each
frame, predictions in descending score order greedily claim the unmatched
valid ground truth with the highest overlap at or above the threshold.
Valid ground truths are those of the evaluated class whose difficulty
equals the target difficulty exactly.  Same-class boxes of any other
difficulty, and look-alike classes (Van for Car, Person_sitting for
Pedestrian), are don't-care: a prediction overlapping one is dropped from
scoring instead of counting as a false positive, and each such box absorbs
at most one prediction.  ``use_dont_care=False`` turns all of that off and
scores every unmatched prediction as a false positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .calib import KittiCalibration, parse_kitti_calib
from .errors import InputError
from .pcio import Box3D, parse_kitti_labels

# Intersections thinner than this are treated as empty (touching edges,
# collinear clip output).
AREA_EPSILON = 1e-12

_RECALL_POSITIONS = 40

# Classes whose ground truths are don't-care when evaluating the key class.
_LOOKALIKE_CLASSES = {"car": ("van",), "pedestrian": ("person_sitting",)}


class BoxFrame(Enum):
    """Which axes of a box form the ground plane (see module docstring)."""

    CAMERA = "camera"
    WORLD = "world"


class EvalMode(Enum):
    """Overlap measure used for matching."""

    IOU_3D = "3d"
    BEV = "bev"


class Difficulty(Enum):
    EASY = "easy"
    MODERATE = "moderate"
    HARD = "hard"


@dataclass(frozen=True)
class EvalConfig:
    """One evaluation column: class, overlap mode, threshold, difficulty."""

    class_label: str = "Car"
    mode: EvalMode = EvalMode.IOU_3D
    iou_threshold: float = 0.7
    difficulty: Difficulty = Difficulty.MODERATE
    frame: BoxFrame = BoxFrame.CAMERA
    use_dont_care: bool = True

    def __post_init__(self) -> None:
        if not (math.isfinite(self.iou_threshold) and 0.0 < self.iou_threshold <= 1.0):
            raise InputError(f"IoU threshold must lie in (0, 1], got {self.iou_threshold}")

    def describe(self) -> str:
        return f"{self.mode.value}@{self.iou_threshold:g}"


@dataclass(frozen=True)
class PrCurve:
    """Interpolated precision at recalls 1/40 .. 40/40 and their mean."""

    recalls: tuple[float, ...]
    precisions: tuple[float, ...]
    ap: float
    gt_count: int

    def __post_init__(self) -> None:
        if len(self.recalls) != _RECALL_POSITIONS or len(self.precisions) != _RECALL_POSITIONS:
            raise InputError("a PR curve has exactly 40 recall positions")
        if any(b > a for a, b in zip(self.precisions, self.precisions[1:])):
            raise InputError("interpolated precision must be non-increasing")
        if not 0.0 <= self.ap <= 1.0:
            raise InputError(f"AP {self.ap} outside [0, 1]")


def _bev_corners(box: Box3D, frame: BoxFrame) -> list[tuple[float, float]]:
    """Footprint corners, counter-clockwise in the ground plane."""
    c, s = math.cos(box.yaw), math.sin(box.yaw)
    half_l, half_w = box.length / 2.0, box.width / 2.0
    corners = []
    for da, db in ((half_l, half_w), (-half_l, half_w), (-half_l, -half_w), (half_l, -half_w)):
        if frame is BoxFrame.CAMERA:
            # Yaw about the down-pointing y axis: +yaw turns +x toward +z.
            corners.append((box.x + c * da + s * db, box.z - s * da + c * db))
        else:
            corners.append((box.x + c * da - s * db, box.y + s * da + c * db))
    return corners


def _vertical_extent(box: Box3D, frame: BoxFrame) -> tuple[float, float]:
    if frame is BoxFrame.CAMERA:
        return box.y - box.height, box.y
    return box.z, box.z + box.height


def _polygon_area(poly: Sequence[tuple[float, float]]) -> float:
    """Shoelace area; input may wind either way."""
    if len(poly) < 3:
        return 0.0
    total = 0.0
    for i in range(len(poly)):
        ax, ay = poly[i]
        bx, by = poly[(i + 1) % len(poly)]
        total += ax * by - bx * ay
    return abs(total) / 2.0


def _clip_polygon(
    subject: list[tuple[float, float]], clip: list[tuple[float, float]]
) -> list[tuple[float, float]]:
    """Clip a convex polygon against a counter-clockwise convex polygon."""
    output = subject
    for i in range(len(clip)):
        if not output:
            return []
        ax, ay = clip[i]
        bx, by = clip[(i + 1) % len(clip)]
        edge_x, edge_y = bx - ax, by - ay
        current, output = output, []
        n = len(current)
        # Points on the edge line count as inside, so identical polygons
        # pass through untouched.
        sides = [edge_x * (py - ay) - edge_y * (px - ax) >= 0.0 for px, py in current]
        for j in range(n):
            k = (j + 1) % n
            px, py = current[j]
            qx, qy = current[k]
            if sides[k]:
                if not sides[j]:
                    output.append(_segment_crossing(ax, ay, bx, by, px, py, qx, qy))
                output.append((qx, qy))
            elif sides[j]:
                output.append(_segment_crossing(ax, ay, bx, by, px, py, qx, qy))
    return output


def _segment_crossing(
    ax: float, ay: float, bx: float, by: float,
    px: float, py: float, qx: float, qy: float,
) -> tuple[float, float]:
    """Intersection of line (a, b) with segment (p, q) that crosses it."""
    dx1, dy1 = bx - ax, by - ay
    dx2, dy2 = qx - px, qy - py
    denom = dx1 * dy2 - dy1 * dx2
    if denom == 0.0:
        # Numerically parallel; the endpoints straddle the line only
        # marginally, so either endpoint is an acceptable answer.
        return qx, qy
    t = ((px - ax) * dy1 - (py - ay) * dx1) / denom
    return px + t * dx2, py + t * dy2


def _footprint_intersection_area(a: Box3D, b: Box3D, frame: BoxFrame) -> float:
    inter = _clip_polygon(_bev_corners(a, frame), _bev_corners(b, frame))
    area = _polygon_area(inter)
    return 0.0 if area < AREA_EPSILON else area


def bev_iou(a: Box3D, b: Box3D, frame: BoxFrame = BoxFrame.CAMERA) -> float:
    """Overlap of the yaw-rotated ground-plane footprints."""
    area_a = _polygon_area(_bev_corners(a, frame))
    area_b = _polygon_area(_bev_corners(b, frame))
    inter = _footprint_intersection_area(a, b, frame)
    union = area_a + area_b - inter
    if union <= AREA_EPSILON:
        return 0.0
    return inter / union


def iou_3d(a: Box3D, b: Box3D, frame: BoxFrame = BoxFrame.CAMERA) -> float:
    """Volume overlap: footprint intersection times vertical overlap.

    Boxes are yaw-rotated only, so volumes factor into footprint area times
    height.  Footprint areas come from the same polygon arithmetic as the
    intersection, which keeps iou_3d(a, a) exactly 1.
    """
    lo_a, hi_a = _vertical_extent(a, frame)
    lo_b, hi_b = _vertical_extent(b, frame)
    overlap = min(hi_a, hi_b) - max(lo_a, lo_b)
    if overlap <= 0.0:
        return 0.0
    inter = _footprint_intersection_area(a, b, frame) * overlap
    vol_a = _polygon_area(_bev_corners(a, frame)) * a.height
    vol_b = _polygon_area(_bev_corners(b, frame)) * b.height
    union = vol_a + vol_b - inter
    if union <= AREA_EPSILON:
        return 0.0
    return inter / union


def assign_difficulty(box: Box3D) -> Difficulty | None:
    """Difficulty stratum from 2D box height, occlusion, truncation.

    Returns None for boxes too small, occluded, or truncated to grade.
    """
    h = box.bbox_height
    if h >= 40.0 and box.occlusion == 0 and box.truncation <= 0.15:
        return Difficulty.EASY
    if h >= 25.0 and box.occlusion <= 1 and box.truncation <= 0.30:
        return Difficulty.MODERATE
    if h >= 25.0 and box.occlusion <= 2 and box.truncation <= 0.50:
        return Difficulty.HARD
    return None


FrameBoxes = Mapping[str, Sequence[Box3D]] | Iterable[tuple[str, Sequence[Box3D]]]


def _as_frame_map(frames: FrameBoxes, what: str) -> dict[str, Sequence[Box3D]]:
    if isinstance(frames, Mapping):
        return dict(frames)
    out: dict[str, Sequence[Box3D]] = {}
    for frame_id, boxes in frames:
        if frame_id in out:
            raise InputError(f"duplicate frame id {frame_id!r} in {what}")
        out[frame_id] = boxes
    return out


def _overlap(a: Box3D, b: Box3D, cfg: EvalConfig) -> float:
    if cfg.mode is EvalMode.BEV:
        return bev_iou(a, b, cfg.frame)
    return iou_3d(a, b, cfg.frame)


def ap40(predictions: FrameBoxes, ground_truths: FrameBoxes, cfg: EvalConfig) -> PrCurve:
    """Average precision over 40 recall positions (see module docstring).

    ``predictions`` and ``ground_truths`` map frame ids to box lists; every
    prediction of the evaluated class needs a score.  Frames present on one
    side only count as empty on the other.
    """
    pred_map = _as_frame_map(predictions, "predictions")
    gt_map = _as_frame_map(ground_truths, "ground truths")
    cls = cfg.class_label.lower()
    lookalikes = _LOOKALIKE_CLASSES.get(cls, ())

    total_valid = 0
    # (score, frame rank, within-frame rank, is true positive)
    scored: list[tuple[float, int, int, bool]] = []
    for frame_rank, frame_id in enumerate(sorted(set(pred_map) | set(gt_map))):
        preds = [p for p in pred_map.get(frame_id, []) if p.label.lower() == cls]
        for p in preds:
            if p.score is None:
                raise InputError(f"frame {frame_id!r}: prediction without score")
        gts = list(gt_map.get(frame_id, []))
        valid = [g for g in gts
                 if g.label.lower() == cls and assign_difficulty(g) is cfg.difficulty]
        if cfg.use_dont_care:
            dont_care = [g for g in gts
                         if (g.label.lower() == cls and assign_difficulty(g) is not cfg.difficulty)
                         or g.label.lower() in lookalikes]
        else:
            dont_care = []
        total_valid += len(valid)

        order = sorted(range(len(preds)), key=lambda i: -preds[i].score)  # stable: score ties keep input order
        gt_taken = [False] * len(valid)
        dc_taken = [False] * len(dont_care)
        for i in order:
            best_j, best_iou = -1, 0.0
            for j, g in enumerate(valid):
                if gt_taken[j]:
                    continue
                v = _overlap(preds[i], g, cfg)
                if v >= cfg.iou_threshold and v > best_iou:
                    best_j, best_iou = j, v
            if best_j >= 0:
                gt_taken[best_j] = True
                scored.append((preds[i].score, frame_rank, i, True))
                continue
            absorbed = False
            for j, g in enumerate(dont_care):
                if not dc_taken[j] and _overlap(preds[i], g, cfg) >= cfg.iou_threshold:
                    dc_taken[j] = True
                    absorbed = True
                    break
            if not absorbed:
                scored.append((preds[i].score, frame_rank, i, False))

    return _curve_from_outcomes(scored, total_valid)


def _curve_from_outcomes(
    scored: list[tuple[float, int, int, bool]], total_valid: int
) -> PrCurve:
    recalls = tuple(i / _RECALL_POSITIONS for i in range(1, _RECALL_POSITIONS + 1))
    if total_valid == 0 or not scored:
        flat = (0.0,) * _RECALL_POSITIONS
        return PrCurve(recalls=recalls, precisions=flat, ap=0.0, gt_count=total_valid)

    scored.sort(key=lambda t: (-t[0], t[1], t[2]))
    flags = np.array([t[3] for t in scored], dtype=bool)
    tp = np.cumsum(flags)
    fp = np.cumsum(~flags)
    precision = tp / (tp + fp)

    interpolated = []
    for i in range(1, _RECALL_POSITIONS + 1):
        # recall >= i/40 compared in integers: exact at grid points.
        reached = tp * _RECALL_POSITIONS >= i * total_valid
        interpolated.append(float(precision[reached].max()) if reached.any() else 0.0)
    ap = sum(interpolated) / _RECALL_POSITIONS
    return PrCurve(recalls=recalls, precisions=tuple(interpolated), ap=ap, gt_count=total_valid)


def evaluate_directories(
    gt_dir: str | Path,
    pred_dir: str | Path,
    configs: Sequence[EvalConfig],
    calib_dir: str | Path | None = None,
) -> dict[EvalConfig, PrCurve]:
    """Evaluate two directories of label files, one curve per config.

    Frames are label-file stems (union of both directories); a stem missing
    on either side contributes an empty box list there.  With ``calib_dir``
    given, boxes on both sides are converted to the world frame through the
    stem's calibration file, and every config must use the world frame.
    """
    gt_dir, pred_dir = Path(gt_dir), Path(pred_dir)
    if not gt_dir.is_dir():
        raise InputError(f"ground-truth directory {gt_dir} does not exist")
    if not pred_dir.is_dir():
        raise InputError(f"prediction directory {pred_dir} does not exist")
    for cfg in configs:
        expected = BoxFrame.CAMERA if calib_dir is None else BoxFrame.WORLD
        if cfg.frame is not expected:
            raise InputError(
                f"config frame {cfg.frame.value} inconsistent with "
                f"{'missing' if calib_dir is None else 'given'} calibration directory"
            )

    stems = sorted({p.stem for p in gt_dir.glob("*.txt")} | {p.stem for p in pred_dir.glob("*.txt")})
    gts: dict[str, Sequence[Box3D]] = {}
    preds: dict[str, Sequence[Box3D]] = {}
    for stem in stems:
        calib: KittiCalibration | None = None
        if calib_dir is not None:
            calib_path = Path(calib_dir) / f"{stem}.txt"
            if not calib_path.exists():
                raise InputError(f"missing calibration file for frame {stem!r}")
            calib = parse_kitti_calib(calib_path.read_text())
        gt_path = gt_dir / f"{stem}.txt"
        pred_path = pred_dir / f"{stem}.txt"
        gts[stem] = parse_kitti_labels(gt_path.read_text(), calib) if gt_path.exists() else []
        preds[stem] = parse_kitti_labels(pred_path.read_text(), calib) if pred_path.exists() else []

    return {cfg: ap40(preds, gts, cfg) for cfg in configs}
