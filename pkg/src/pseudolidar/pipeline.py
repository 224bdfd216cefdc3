"""Batch orchestration: per-frame project, paint, sparsify over a split.

A frame is a file stem shared across the input directories (KITTI uses
6-digit zero-padded stems; any stem works).  Each frame is processed by
pure module calls and written atomically (temp file + rename), so a killed
run never leaves a truncated output and can resume.

Between stages the cloud passes through the `.bin` codec, which quantizes
coordinates to 32-bit floats.  Running the stages as separate commands
moves the same bytes through the same codec, so a one-shot pipeline run is
byte-identical to the staged one, and worker count cannot change bytes
because frames never interact.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .calib import extrinsics_from_kitti, intrinsics_from_p2, parse_kitti_calib
from .config import PipelineConfig
from .errors import InputError, PseudoLidarError, ShapeError
from .painting import InstanceMaskSet, PaintedPointCloud, paint_points
from .pcio import (
    CloudLayout,
    read_cloud_bin,
    read_depth_file,
    read_image_file,
    read_mask_file,
    write_cloud_bin,
)
from .projection import depth_to_pseudolidar, valid_pixel_provenance
from .sparsify import SparseCloudReport, sparsify

logger = logging.getLogger("pseudolidar")

_DEPTH_SUFFIXES = (".png", ".f32")
_IMAGE_SUFFIXES = (".png", ".u8")
_MASK_SUFFIXES = (".png", ".u8")


def _quantize(cloud, layout: CloudLayout):
    """Round-trip through the on-disk codec: the stage-boundary precision."""
    return read_cloud_bin(write_cloud_bin(cloud, layout), layout)


def project_file(depth_path: Path, calib_path: Path) -> bytes:
    """Depth file + calib file -> XYZ `.bin` bytes."""
    depth = read_depth_file(depth_path)
    calib = parse_kitti_calib(Path(calib_path).read_text())
    cloud, _ = depth_to_pseudolidar(depth, intrinsics_from_p2(calib), extrinsics_from_kitti(calib))
    return write_cloud_bin(cloud, CloudLayout.XYZ)


def paint_file(
    cloud_bytes: bytes,
    input_layout: CloudLayout,
    depth_path: Path,
    image_path: Path,
    mask_path: Path | None,
) -> bytes:
    """Painted XYZRGB `.bin` bytes for a cloud previously projected from
    ``depth_path``.

    Point-to-pixel correspondence is re-derived from the depth file's valid
    pixels; the cloud must have exactly one point per valid pixel, in
    row-major order.  A missing mask paints everything background.
    """
    if input_layout is CloudLayout.XYZRGB:
        raise InputError("painting expects an unpainted cloud (xyz or xyzi layout)")
    cloud = read_cloud_bin(cloud_bytes, input_layout)
    depth = read_depth_file(depth_path)
    provenance = valid_pixel_provenance(depth)
    if provenance.count != cloud.count:
        raise ShapeError(
            f"cloud has {cloud.count} points but the depth map has "
            f"{provenance.count} valid pixels; not the cloud's source depth?"
        )
    image = read_image_file(image_path)
    if mask_path is None:
        masks = InstanceMaskSet(foreground=np.zeros((depth.height, depth.width), dtype=bool))
    else:
        masks = read_mask_file(mask_path)
    painted = paint_points(cloud, provenance, image, masks)
    return write_cloud_bin(painted, CloudLayout.XYZRGB)


def sparsify_file(
    cloud_bytes: bytes,
    input_layout: CloudLayout,
    cfg: PipelineConfig,
) -> tuple[bytes, SparseCloudReport]:
    """Sparse `.bin` bytes (in ``cfg.layout``) plus the stage-count report.

    An unpainted input gets zero paint so the output layout stays free.
    """
    cloud = read_cloud_bin(cloud_bytes, input_layout)
    if not isinstance(cloud, PaintedPointCloud):
        cloud = PaintedPointCloud.from_parts(cloud.xyz, np.zeros((cloud.count, 3)))
    sparse, report = sparsify(cloud, cfg.sparsify)
    return write_cloud_bin(sparse, cfg.layout), report


def process_frame(
    depth_path: Path,
    image_path: Path,
    mask_path: Path | None,
    calib_path: Path,
    cfg: PipelineConfig,
) -> tuple[bytes, SparseCloudReport]:
    """One frame end to end, staged through the codec between stages."""
    projected = project_file(depth_path, calib_path)
    painted = paint_file(projected, CloudLayout.XYZ, depth_path, image_path, mask_path)
    return sparsify_file(painted, CloudLayout.XYZRGB, cfg)


def _find_with_suffix(directory: Path, stem: str, suffixes: tuple[str, ...]) -> Path | None:
    for suffix in suffixes:
        candidate = directory / f"{stem}{suffix}"
        if candidate.exists():
            return candidate
    return None


def discover_frames(depth_dir: Path) -> list[str]:
    """Frame stems in a depth directory, sorted."""
    stems = {p.stem for p in depth_dir.iterdir()
             if p.suffix in _DEPTH_SUFFIXES and p.is_file()}
    return sorted(stems)


@dataclass(frozen=True)
class FrameResult:
    stem: str
    input_count: int
    output_count: int


@dataclass(frozen=True)
class SplitResult:
    """Outcome of a batch run over one split."""

    processed: tuple[FrameResult, ...]
    skipped: tuple[str, ...]
    failed: tuple[tuple[str, str], ...]  # (stem, reason)

    @property
    def ok(self) -> bool:
        return not self.failed


def atomic_write_bytes(path: Path, data: bytes) -> None:
    """Write via a sibling temp file and rename, so readers never see a
    partial file and interrupted runs leave no output at the final name."""
    tmp = path.with_name(f".{path.name}.tmp{os.getpid()}")
    try:
        tmp.write_bytes(data)
        os.replace(tmp, path)
    finally:
        tmp.unlink(missing_ok=True)


def _frame_paths(stem: str, cfg: PipelineConfig) -> tuple[Path, Path, Path | None, Path]:
    assert cfg.depth_dir and cfg.image_dir and cfg.calib_dir  # validated by run_split
    depth = _find_with_suffix(cfg.depth_dir, stem, _DEPTH_SUFFIXES)
    if depth is None:
        raise InputError(f"no depth file for frame {stem!r}")
    image = _find_with_suffix(cfg.image_dir, stem, _IMAGE_SUFFIXES)
    if image is None:
        raise InputError(f"no image file for frame {stem!r}")
    mask = None
    if cfg.mask_dir is not None:
        mask = _find_with_suffix(cfg.mask_dir, stem, _MASK_SUFFIXES)
    if mask is None and cfg.require_masks:
        raise InputError(f"no mask file for frame {stem!r} and masks are required")
    calib = cfg.calib_dir / f"{stem}.txt"
    if not calib.exists():
        raise InputError(f"no calibration file for frame {stem!r}")
    return depth, image, mask, calib


def _run_frame(stem: str, cfg: PipelineConfig) -> FrameResult:
    depth, image, mask, calib = _frame_paths(stem, cfg)
    data, report = process_frame(depth, image, mask, calib, cfg)
    assert cfg.output_dir is not None
    atomic_write_bytes(cfg.output_dir / f"{stem}.bin", data)
    return FrameResult(stem=stem, input_count=report.input_count, output_count=report.output_count)


def _run_frame_task(args: tuple[str, PipelineConfig]) -> FrameResult:
    return _run_frame(*args)


_MANIFEST_NAME = "manifest.txt"


def _read_manifest(path: Path) -> dict[str, tuple[int, int]]:
    entries: dict[str, tuple[int, int]] = {}
    if not path.exists():
        return entries
    for line in path.read_text().splitlines():
        parts = line.split()
        if len(parts) == 3:
            try:
                entries[parts[0]] = (int(parts[1]), int(parts[2]))
            except ValueError:
                continue
    return entries


def write_manifest(output_dir: Path, results: list[FrameResult]) -> None:
    """Merge results into ``manifest.txt``: ``stem N N_sparse`` per line."""
    path = output_dir / _MANIFEST_NAME
    entries = _read_manifest(path)
    for result in results:
        entries[result.stem] = (result.input_count, result.output_count)
    text = "".join(f"{stem} {n} {n_out}\n" for stem, (n, n_out) in sorted(entries.items()))
    atomic_write_bytes(path, text.encode("ascii"))


def run_split(cfg: PipelineConfig, force: bool = False) -> SplitResult:
    """Process every frame of a split; resumable and parallel.

    Frames whose output file already exists are skipped unless ``force``.
    Per-frame failures are collected, not fatal; the caller decides the
    exit status from the result.  Output bytes are independent of
    ``cfg.workers``.
    """
    for name in ("depth_dir", "image_dir", "calib_dir"):
        directory = getattr(cfg, name)
        if directory is None:
            raise InputError(f"{name} is required for a batch run")
        if not directory.is_dir():
            raise InputError(f"{name} {directory} is not a directory")
    if cfg.output_dir is None:
        raise InputError("output_dir is required for a batch run")
    assert cfg.depth_dir is not None
    cfg.output_dir.mkdir(parents=True, exist_ok=True)

    stems = discover_frames(cfg.depth_dir)
    todo: list[str] = []
    skipped: list[str] = []
    for stem in stems:
        if not force and (cfg.output_dir / f"{stem}.bin").exists():
            skipped.append(stem)
        else:
            todo.append(stem)

    processed: list[FrameResult] = []
    failed: list[tuple[str, str]] = []

    def record(stem: str, outcome: FrameResult | Exception) -> None:
        if isinstance(outcome, Exception):
            failed.append((stem, str(outcome)))
            logger.error("%s: %s", stem, outcome)
        else:
            processed.append(outcome)
            logger.info("%s: %d -> %d points", stem, outcome.input_count, outcome.output_count)

    if cfg.workers == 1:
        for stem in todo:
            try:
                record(stem, _run_frame(stem, cfg))
            except PseudoLidarError as exc:
                record(stem, exc)
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = {stem: pool.submit(_run_frame_task, (stem, cfg)) for stem in todo}
            for stem, future in futures.items():
                try:
                    record(stem, future.result())
                except PseudoLidarError as exc:
                    record(stem, exc)

    if processed:
        write_manifest(cfg.output_dir, processed)
    processed.sort(key=lambda r: r.stem)
    return SplitResult(
        processed=tuple(processed), skipped=tuple(skipped), failed=tuple(sorted(failed))
    )
