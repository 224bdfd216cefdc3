"""Three-stage cloud sparsification: denoise, range-filter, capped sampling.

Stage 1 bins points into spherical voxels (azimuth, elevation, radius around
the coordinate origin) and keeps one mean point per occupied voxel.  Stage 2
drops points outside per-axis half-open ranges.  Stage 3 bins the survivors
into Cartesian voxels and randomly downsamples any voxel holding more than a
fixed cap of points.

Determinism contract: voxels are processed in lexicographic index order and
each over-full voxel gets its own generator, ``PCG64`` seeded with
``SeedSequence([seed, voxel_rank])`` where ``voxel_rank`` is the voxel's
position in that order.  Sampling is a no-replacement ``Generator.choice``
over the voxel's members sorted by original point index, emitted in ascending
original order.  Identical input, config, and seed therefore reproduce
byte-identical output regardless of parallelism.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError, UndefinedDirectionError
from .painting import PaintedPointCloud


@dataclass(frozen=True)
class SparsifyConfig:
    """All sparsification parameters.

    Spherical voxel size is (azimuth deg, elevation deg, radius m); axis
    ranges are half-open [min, max) in meters; ``voxel_size`` is the coarse
    Cartesian voxel edge per axis; ``max_points_per_voxel`` is the stage-3 cap.
    """

    spherical_voxel_deg_deg_m: tuple[float, float, float] = (0.2, 0.2, 0.05)
    x_range: tuple[float, float] = (0.0, 70.4)
    y_range: tuple[float, float] = (-40.0, 40.0)
    z_range: tuple[float, float] = (-3.0, 1.0)
    voxel_size: tuple[float, float, float] = (0.05, 0.05, 0.1)
    max_points_per_voxel: int = 5
    seed: int = 0

    def __post_init__(self) -> None:
        if any(s <= 0 for s in self.spherical_voxel_deg_deg_m):
            raise ShapeError("spherical voxel sizes must be positive")
        if any(s <= 0 for s in self.voxel_size):
            raise ShapeError("voxel sizes must be positive")
        for lo, hi in (self.x_range, self.y_range, self.z_range):
            if not (lo < hi):
                raise ShapeError(f"degenerate axis range [{lo}, {hi})")
        if self.max_points_per_voxel < 1:
            raise ShapeError("per-voxel cap must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ShapeError("seed must fit an unsigned 64-bit integer")

    @classmethod
    def kitti(cls, seed: int = 0) -> "SparsifyConfig":
        """Defaults tuned for KITTI-sized scenes."""
        return cls(seed=seed)

    @classmethod
    def waymo(cls, seed: int = 0) -> "SparsifyConfig":
        """Wider ranges and coarser voxels for Waymo-sized scenes."""
        return cls(
            x_range=(0.0, 75.2),
            y_range=(-75.2, 75.2),
            z_range=(-2.0, 4.0),
            voxel_size=(0.1, 0.1, 0.15),
            seed=seed,
        )


@dataclass(frozen=True)
class SparseCloudReport:
    """Point counts after each stage; counts are non-increasing."""

    input_count: int
    denoised_count: int
    filtered_count: int
    output_count: int

    @property
    def reduction_ratio(self) -> float:
        """Output over input; 0.0 for an empty input."""
        if self.input_count == 0:
            return 0.0
        return self.output_count / self.input_count

    def to_text(self) -> str:
        return (
            f"input: {self.input_count}\n"
            f"denoised: {self.denoised_count}\n"
            f"filtered: {self.filtered_count}\n"
            f"output: {self.output_count}\n"
        )


def to_spherical(point: np.ndarray) -> tuple[float, float, float]:
    """(x, y, z) -> (radius m, azimuth rad, elevation rad); origin is rejected."""
    x, y, z = (float(c) for c in np.asarray(point, dtype=np.float64).reshape(3))
    r = math.sqrt(x * x + y * y + z * z)
    if r == 0.0:
        raise UndefinedDirectionError("spherical direction undefined at the origin")
    return r, math.atan2(y, x), math.asin(max(-1.0, min(1.0, z / r)))


def _spherical_voxel_indices(xyz: np.ndarray, cfg: SparsifyConfig) -> np.ndarray:
    """Integer (azimuth, elevation, radius) voxel index per point."""
    r = np.linalg.norm(xyz, axis=1)
    azimuth = np.arctan2(xyz[:, 1], xyz[:, 0])
    # Points at the origin have no direction; bin them at (0, 0, 0).
    with np.errstate(invalid="ignore", divide="ignore"):
        elevation = np.where(r > 0, np.arcsin(np.clip(xyz[:, 2] / np.where(r > 0, r, 1.0), -1, 1)), 0.0)
    d_az, d_el, d_r = cfg.spherical_voxel_deg_deg_m
    keys = np.empty((xyz.shape[0], 3), dtype=np.int64)
    keys[:, 0] = np.floor(azimuth / math.radians(d_az))
    keys[:, 1] = np.floor(elevation / math.radians(d_el))
    keys[:, 2] = np.floor(r / d_r)
    return keys


def spherical_denoise(cloud: PaintedPointCloud, cfg: SparsifyConfig) -> PaintedPointCloud:
    """Collapse each occupied spherical voxel to the mean of its members.

    All six channels are averaged, so paint stays in [0, 1].  Output points
    are ordered by lexicographic (azimuth, elevation, radius) voxel index.
    """
    if cloud.count == 0:
        return cloud
    keys = _spherical_voxel_indices(cloud.xyz, cfg)
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    sums = np.zeros((uniq.shape[0], 6), dtype=np.float64)
    np.add.at(sums, inverse, cloud.data)
    counts = np.bincount(inverse, minlength=uniq.shape[0]).astype(np.float64)
    return PaintedPointCloud(sums / counts[:, None])


def range_filter(cloud: PaintedPointCloud, cfg: SparsifyConfig) -> PaintedPointCloud:
    """Keep points inside the half-open per-axis ranges, preserving order."""
    xyz = cloud.xyz
    keep = (
        (xyz[:, 0] >= cfg.x_range[0])
        & (xyz[:, 0] < cfg.x_range[1])
        & (xyz[:, 1] >= cfg.y_range[0])
        & (xyz[:, 1] < cfg.y_range[1])
        & (xyz[:, 2] >= cfg.z_range[0])
        & (xyz[:, 2] < cfg.z_range[1])
    )
    return PaintedPointCloud(cloud.data[keep])


def voxel_downsample(cloud: PaintedPointCloud, cfg: SparsifyConfig) -> PaintedPointCloud:
    """Cap each Cartesian voxel at ``max_points_per_voxel`` kept points.

    Under-full voxels pass through unchanged; over-full ones contribute a
    seeded uniform sample (see the module docstring for the exact scheme).
    Every output record is an untouched input record.
    """
    if cloud.count == 0:
        return cloud
    size = np.asarray(cfg.voxel_size, dtype=np.float64)
    keys = np.floor(cloud.xyz / size).astype(np.int64)
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    counts = np.bincount(inverse, minlength=uniq.shape[0])

    # Group point indices by voxel rank, original order within each group.
    perm = np.argsort(inverse, kind="stable")
    starts = np.concatenate([[0], np.cumsum(counts)])

    cap = cfg.max_points_per_voxel
    keep = counts[inverse[perm]] <= cap
    for rank in np.nonzero(counts > cap)[0]:
        start, n = starts[rank], counts[rank]
        rng = np.random.default_rng([cfg.seed, int(rank)])
        chosen = rng.choice(n, size=cap, replace=False)
        keep[start + chosen] = True
    return PaintedPointCloud(cloud.data[perm[keep]])


def sparsify(
    cloud: PaintedPointCloud, cfg: SparsifyConfig
) -> tuple[PaintedPointCloud, SparseCloudReport]:
    """Run denoise, range filter, and capped voxel sampling in order."""
    denoised = spherical_denoise(cloud, cfg)
    filtered = range_filter(denoised, cfg)
    sampled = voxel_downsample(filtered, cfg)
    report = SparseCloudReport(
        input_count=cloud.count,
        denoised_count=denoised.count,
        filtered_count=filtered.count,
        output_count=sampled.count,
    )
    return sampled, report
