"""Shared fixtures: calibration text, synthetic frames, split builders."""

from __future__ import annotations

import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from pseudolidar import (
    DepthMap,
    InstanceMaskSet,
    RgbImage,
    write_depth_file,
    write_image_file,
    write_mask_file,
)

# A real KITTI calibration block (sequence 000000 of the object split).
KITTI_CALIB_TEXT = """\
P2: 7.215377000000e+02 0.000000000000e+00 6.095593000000e+02 4.485728000000e+01 0.000000000000e+00 7.215377000000e+02 1.728540000000e+02 2.163791000000e-01 0.000000000000e+00 0.000000000000e+00 1.000000000000e+00 2.745884000000e-03
R0_rect: 9.999239000000e-01 9.837760000000e-03 -7.445048000000e-03 -9.869795000000e-03 9.999421000000e-01 -4.278459000000e-03 7.402527000000e-03 4.351614000000e-03 9.999631000000e-01
Tr_velo_to_cam: 7.533745000000e-03 -9.999714000000e-01 -6.166020000000e-04 -4.069766000000e-03 1.480249000000e-02 7.280733000000e-04 -9.998902000000e-01 -7.631618000000e-02 9.998621000000e-01 7.523790000000e-03 1.480755000000e-02 -2.717806000000e-01
"""

# Identity rectification and axis-aligned mounting: hand-checkable geometry.
SIMPLE_CALIB_TEXT = """\
P2: 700.0 0.0 600.0 0.0 0.0 700.0 180.0 0.0 0.0 0.0 1.0 0.0
R0_rect: 1 0 0 0 1 0 0 0 1
Tr_velo_to_cam: 0 -1 0 0 0 0 -1 0 1 0 0 0
"""


@pytest.fixture()
def kitti_calib_text() -> str:
    return KITTI_CALIB_TEXT


@pytest.fixture()
def simple_calib_text() -> str:
    return SIMPLE_CALIB_TEXT


def make_frame(rng: np.random.Generator, width: int = 24, height: int = 16):
    """One synthetic frame: depth with holes, an RGB image, an instance map.

    Depth values are multiples of 1/256 so the 16-bit PNG encoding is exact.
    """
    raw = rng.integers(64, 256 * 40, (height, width), dtype=np.uint16)
    raw[rng.random((height, width)) < 0.25] = 0
    depth = DepthMap(raw.astype(np.float64) / 256.0)
    image = RgbImage(rng.integers(0, 256, (height, width, 3), dtype=np.uint8))
    ids = rng.integers(0, 4, (height, width)).astype(np.int32)
    masks = InstanceMaskSet.from_id_map(ids)
    return depth, image, masks


def write_split(
    root: Path,
    stems: list[str],
    rng: np.random.Generator,
    fmt: str = "png",
    width: int = 24,
    height: int = 16,
    calib_text: str = KITTI_CALIB_TEXT,
) -> dict[str, Path]:
    """Materialize a split on disk; returns the five directory paths."""
    dirs = {
        name: root / name
        for name in ("depth", "image", "mask", "calib", "output")
    }
    for d in dirs.values():
        d.mkdir(parents=True, exist_ok=True)
    depth_ext = ".png" if fmt == "png" else ".f32"
    pixel_ext = ".png" if fmt == "png" else ".u8"
    for stem in stems:
        depth, image, masks = make_frame(rng, width=width, height=height)
        write_depth_file(dirs["depth"] / f"{stem}{depth_ext}", depth)
        write_image_file(dirs["image"] / f"{stem}{pixel_ext}", image)
        write_mask_file(dirs["mask"] / f"{stem}{pixel_ext}", masks)
        (dirs["calib"] / f"{stem}.txt").write_text(calib_text)
    return dirs


def run_cli(*args: str, cwd: Path | None = None) -> subprocess.CompletedProcess:
    """Invoke the CLI as a real subprocess."""
    return subprocess.run(
        [sys.executable, "-m", "pseudolidar", *[str(a) for a in args]],
        capture_output=True,
        text=True,
        cwd=cwd,
    )
