"""Acceptance gate: one test per release criterion, at stated tolerances.

Each test prints nothing on success; failures carry the measured value so a
red run is directly actionable.  Brute-force reference implementations live
in ``oracles.py`` and share no code with the package.
"""

import math
import time

import numpy as np
import pytest

from conftest import KITTI_CALIB_TEXT, make_frame, run_cli, write_split
from oracles import mc_bev_iou_batch, paint_oracle, parse_ply, sparsify_oracle
from test_calib import random_rotation
from pseudolidar import (
    Box3D,
    BoxFrame,
    CameraExtrinsics,
    CameraIntrinsics,
    CloudLayout,
    DepthMap,
    EvalConfig,
    InstanceMaskSet,
    PaintedPointCloud,
    PointCloud,
    RgbImage,
    SparsifyConfig,
    ap40,
    bev_iou,
    camera_to_world,
    paint_points,
    parse_kitti_calib,
    parse_kitti_labels,
    pixel_to_camera,
    process_frame,
    read_cloud_bin,
    reproject,
    resolve_config,
    serialize_kitti_calib,
    serialize_kitti_labels,
    sparsify,
    valid_pixel_provenance,
    write_cloud_bin,
    write_depth_file,
    write_image_file,
    write_mask_file,
    export_ply,
)


def test_projection_round_trip_is_lossless():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    for _ in range(1000):
        intrinsics = CameraIntrinsics(
            fx=float(rng.uniform(200, 1500)),
            fy=float(rng.uniform(200, 1500)),
            cx=float(rng.uniform(400, 800)),
            cy=float(rng.uniform(100, 300)),
        )
        extrinsics = CameraExtrinsics(
            rotation=random_rotation(rng), translation=rng.uniform(-5, 5, 3)
        )
        u = float(rng.uniform(0, 1200))
        v = float(rng.uniform(0, 400))
        d = float(rng.uniform(0.3, 80.0))
        point = camera_to_world(pixel_to_camera(u, v, d, intrinsics), extrinsics)
        u2, v2, d2 = reproject(point, intrinsics, extrinsics)
        assert abs(u2 - u) < 1e-6, f"u drifted by {abs(u2 - u):.3e}"
        assert abs(v2 - v) < 1e-6, f"v drifted by {abs(v2 - v):.3e}"
        assert abs(d2 - d) < 1e-9, f"depth drifted by {abs(d2 - d):.3e}"
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0, f"1000 round trips took {elapsed:.2f}s (budget 1s)"


def test_single_pixel_back_projection_hand_case_is_exact():
    intrinsics = CameraIntrinsics(fx=700.0, fy=700.0, cx=600.0, cy=180.0)
    assert pixel_to_camera(950.0, 180.0, 7.0, intrinsics) == (3.5, 0.0, 7.0)


def test_painting_matches_brute_force_on_every_mask_pattern():
    rng = np.random.default_rng(2025)
    xyz = rng.normal(size=(16, 3))
    cloud = PointCloud(xyz)
    provenance = valid_pixel_provenance(DepthMap(np.ones((4, 4))))
    image = RgbImage(rng.integers(0, 256, (4, 4, 3), dtype=np.uint8))
    pixels = image.pixels

    patterns = np.arange(65536, dtype=np.uint32)
    all_bits = ((patterns[:, None] >> np.arange(16)[None, :]) & 1).astype(bool)

    start = time.perf_counter()
    for pattern in range(65536):
        foreground = all_bits[pattern].reshape(4, 4)
        painted = paint_points(cloud, provenance, image,
                               InstanceMaskSet(foreground=foreground))
        expected = paint_oracle(xyz, provenance.uv, pixels, foreground)
        assert np.array_equal(painted.data, expected), f"pattern {pattern:#06x} disagreed"
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0, f"65536 patterns took {elapsed:.2f}s (budget 10s)"


def test_sparsification_matches_brute_force_and_stays_in_range():
    rng = np.random.default_rng(2026)
    ranges = dict(x_range=(0.0, 70.4), y_range=(-40.0, 40.0), z_range=(-3.0, 1.0))
    for trial in range(200):
        n = int(rng.integers(1, 101))
        if trial % 2:
            # Clustered points overflow coarse voxels, forcing the sampler;
            # a scattered tail keeps the range filter busy.
            centers = np.column_stack([
                rng.uniform(5, 60, 3), rng.uniform(-30, 30, 3), rng.uniform(-2, 0.5, 3),
            ])
            xyz = centers[rng.integers(0, 3, n)] + rng.uniform(-0.4, 0.4, (n, 3))
            tail = max(1, n // 10)
            xyz[:tail, 0] = rng.uniform(-5, 80, tail)
            cfg = SparsifyConfig(
                spherical_voxel_deg_deg_m=(10.0, 10.0, 5.0),
                voxel_size=(2.0, 2.0, 2.0),
                max_points_per_voxel=2,
                seed=trial,
                **ranges,
            )
        else:
            xyz = np.column_stack([
                rng.uniform(-5, 80, n), rng.uniform(-50, 50, n), rng.uniform(-5, 3, n),
            ])
            cfg = SparsifyConfig(seed=trial, **ranges)
        records = np.column_stack([xyz, rng.random((n, 3))])

        sparse, report = sparsify(PaintedPointCloud(records), cfg)
        expected = sparsify_oracle(records, cfg)
        assert sparse.data.shape == expected.shape, (
            f"trial {trial}: {sparse.data.shape} vs oracle {expected.shape}")
        assert np.allclose(sparse.data, expected, rtol=0.0, atol=1e-9), (
            f"trial {trial}: max deviation "
            f"{np.max(np.abs(sparse.data - expected)):.3e}")
        assert report.output_count == sparse.count

        out = sparse.xyz
        assert np.all((out[:, 0] >= 0.0) & (out[:, 0] < 70.4))
        assert np.all((out[:, 1] >= -40.0) & (out[:, 1] < 40.0))
        assert np.all((out[:, 2] >= -3.0) & (out[:, 2] < 1.0))


def test_sparsification_shrinks_a_dense_frame_quickly(tmp_path):
    rng = np.random.default_rng(2027)
    width, height = 1224, 370
    raw = rng.integers(256, 256 * 60, (height, width), dtype=np.uint16)
    depth = DepthMap(raw.astype(np.float64) / 256.0)
    assert int(depth.valid_mask.sum()) == 452880

    depth_path = tmp_path / "d.png"
    image_path = tmp_path / "i.png"
    mask_path = tmp_path / "m.png"
    calib_path = tmp_path / "c.txt"
    write_depth_file(depth_path, depth)
    write_image_file(image_path, RgbImage(
        rng.integers(0, 256, (height, width, 3), dtype=np.uint8)))
    write_mask_file(mask_path, InstanceMaskSet.from_id_map(
        rng.integers(0, 5, (height, width)).astype(np.int32)))
    calib_path.write_text(KITTI_CALIB_TEXT)

    cfg = resolve_config()
    assert cfg.workers == 1
    start = time.perf_counter()
    data, report = process_frame(depth_path, image_path, mask_path, calib_path, cfg)
    elapsed = time.perf_counter() - start

    assert report.input_count == 452880
    assert report.output_count < report.input_count, "pipeline did not shrink the cloud"
    assert len(data) == report.output_count * 24
    assert elapsed < 5.0, f"dense frame took {elapsed:.2f}s (budget 5s)"


def test_batch_pipeline_is_deterministic(tmp_path):
    rng = np.random.default_rng(2028)
    stems = ["000000", "000001", "000002"]
    dirs = write_split(tmp_path, stems, rng)

    def run(output_dir, workers):
        result = run_cli(
            "pipeline",
            "--depth-dir", dirs["depth"],
            "--image-dir", dirs["image"],
            "--mask-dir", dirs["mask"],
            "--calib-dir", dirs["calib"],
            "--output-dir", output_dir,
            "--seed", "7",
            "--workers", str(workers),
            "--quiet",
        )
        assert result.returncode == 0, result.stderr
        return {p.name: p.read_bytes() for p in output_dir.iterdir()}

    first = run(tmp_path / "out_a", 1)
    assert set(first) == {f"{stem}.bin" for stem in stems} | {"manifest.txt"}
    repeat = run(tmp_path / "out_b", 1)
    assert repeat == first, "same seed, same config: outputs differ between runs"
    parallel = run(tmp_path / "out_c", 8)
    assert parallel == first, "worker count changed output bytes"


def test_rotated_iou_matches_monte_carlo():
    start = time.perf_counter()

    unit = dict(y=1.5, z=10.0, height=1.5, width=1.0, length=1.0, label="Car")
    straight = Box3D(x=0.0, yaw=0.0, **unit)
    tilted = Box3D(x=0.0, yaw=math.pi / 4, **unit)
    value = bev_iou(straight, tilted)
    assert abs(value - math.sqrt(2.0) / 2.0) < 1e-6, f"45-degree case gave {value!r}"

    rng = np.random.default_rng(2029)
    for frame in (BoxFrame.CAMERA, BoxFrame.WORLD):
        boxes_a, boxes_b = [], []
        for _ in range(5000):
            x = float(rng.uniform(-10, 10))
            ground = float(rng.uniform(5, 30))
            vertical = float(rng.uniform(-2, 2))
            position = dict(x=x, z=ground, y=vertical) if frame is BoxFrame.CAMERA \
                else dict(x=x, y=ground, z=vertical)
            boxes_a.append(Box3D(
                label="Car", yaw=float(rng.uniform(-3.1, 3.1)),
                length=float(rng.uniform(0.8, 5.0)), width=float(rng.uniform(0.8, 5.0)),
                height=float(rng.uniform(0.8, 3.0)), **position))
            a = boxes_a[-1]
            shifted = dict(position)
            shifted["x"] += float(rng.uniform(-3, 3))
            shifted["z" if frame is BoxFrame.CAMERA else "y"] += float(rng.uniform(-3, 3))
            boxes_b.append(Box3D(
                label="Car", yaw=float(rng.uniform(-3.1, 3.1)),
                length=float(rng.uniform(0.8, 5.0)), width=float(rng.uniform(0.8, 5.0)),
                height=float(rng.uniform(0.8, 3.0)), **shifted))
        exact = np.array([bev_iou(a, b, frame) for a, b in zip(boxes_a, boxes_b)])
        sampled = mc_bev_iou_batch(boxes_a, boxes_b, frame.value)
        worst = float(np.max(np.abs(exact - sampled)))
        assert worst < 2e-3, f"{frame.value}: worst disagreement {worst:.2e}"

    elapsed = time.perf_counter() - start
    assert elapsed < 60.0, f"10000 pairs took {elapsed:.1f}s (budget 60s)"


def _moderate(x, score=None, label="Car"):
    return Box3D(label=label, x=x, y=1.5, z=10.0, height=1.5, width=1.6,
                 length=4.0, yaw=0.0, bbox=(0.0, 0.0, 50.0, 30.0), score=score)


def _random_eval_set(rng):
    gts, preds = {}, {}
    for f in range(int(rng.integers(1, 5))):
        frame_id = f"{f:03d}"
        gt_boxes, pred_boxes = [], []
        for i in range(int(rng.integers(0, 5))):
            x = 12.0 * i + float(rng.uniform(-2, 2))
            gt_boxes.append(_moderate(x))
            if rng.random() < 0.7:
                pred_boxes.append(_moderate(x + float(rng.uniform(-0.5, 0.5)),
                                            score=float(rng.random())))
        for i in range(int(rng.integers(0, 3))):
            pred_boxes.append(_moderate(-50.0 - 12.0 * i, score=float(rng.random())))
        gts[frame_id] = gt_boxes
        preds[frame_id] = pred_boxes
    return preds, gts


def _rescored(preds, transform):
    return {
        frame_id: [
            Box3D(label=b.label, x=b.x, y=b.y, z=b.z, height=b.height,
                  width=b.width, length=b.length, yaw=b.yaw, bbox=b.bbox,
                  score=transform(b.score))
            for b in boxes
        ]
        for frame_id, boxes in preds.items()
    }


def test_ap40_reference_cases_and_score_invariance():
    # A detector that reproduces every truth exactly scores 1.0, exactly.
    rng = np.random.default_rng(2030)
    gts = {f"{f:03d}": [_moderate(12.0 * i) for i in range(3)] for f in range(4)}
    perfect = {
        frame_id: [_moderate(b.x, score=float(rng.uniform(0.1, 1.0))) for b in boxes]
        for frame_id, boxes in gts.items()
    }
    curve = ap40(perfect, gts, EvalConfig())
    assert curve.ap == 1.0
    assert curve.gt_count == 12

    # Two truths, three detections, the middle one spurious: 5/6.
    hand_gts = {"0": [_moderate(0.0), _moderate(20.0)]}
    hand_preds = {"0": [
        _moderate(0.0, score=0.9),
        _moderate(40.0, score=0.8),
        _moderate(20.0, score=0.7),
    ]}
    hand = ap40(hand_preds, hand_gts, EvalConfig())
    assert abs(hand.ap - 5.0 / 6.0) < 1e-6, f"hand case gave {hand.ap!r}"

    # Any strictly increasing rescoring leaves the whole curve untouched.
    transforms = (lambda s: 0.4 * s + 0.3, lambda s: s * s, lambda s: math.sqrt(s))
    for trial in range(100):
        set_rng = np.random.default_rng(3000 + trial)
        preds, gts = _random_eval_set(set_rng)
        baseline = ap40(preds, gts, EvalConfig())
        for transform in transforms:
            rescored = ap40(_rescored(preds, transform), gts, EvalConfig())
            assert rescored == baseline, f"trial {trial}: rescoring moved the curve"


def test_file_formats_round_trip_bit_exactly(tmp_path):
    rng = np.random.default_rng(2031)

    # Cloud binaries, every layout.
    xyz = rng.normal(size=(64, 3)).astype(np.float32).astype(np.float64) * 5.0
    paint = (rng.integers(0, 256, (64, 3)) / 255.0).astype(np.float32).astype(np.float64)
    cloud = PaintedPointCloud.from_parts(xyz, paint)
    for layout in CloudLayout:
        first = write_cloud_bin(cloud, layout)
        assert write_cloud_bin(read_cloud_bin(first, layout), layout) == first

    # Calibration text: parse -> serialize -> parse preserves every matrix
    # bit, and serialize is a fixpoint.
    calib = parse_kitti_calib(KITTI_CALIB_TEXT)
    text = serialize_kitti_calib(calib)
    again = parse_kitti_calib(text)
    assert np.array_equal(again.p2, calib.p2)
    assert np.array_equal(again.r0_rect, calib.r0_rect)
    assert np.array_equal(again.tr_velo_to_cam, calib.tr_velo_to_cam)
    assert serialize_kitti_calib(again) == text

    # Label files: boxes on the 6-decimal grid survive unchanged.
    boxes = []
    for i in range(25):
        boxes.append(Box3D(
            label="Car" if i % 2 else "Pedestrian",
            truncation=round(float(rng.uniform(0, 0.9)), 6),
            occlusion=int(rng.integers(0, 3)),
            alpha=round(float(rng.uniform(-3.14, 3.14)), 6),
            bbox=tuple(round(float(v), 6) for v in rng.uniform(0, 1200, 4)),
            height=round(float(rng.uniform(0.5, 3)), 6),
            width=round(float(rng.uniform(0.5, 3)), 6),
            length=round(float(rng.uniform(0.5, 6)), 6),
            x=round(float(rng.uniform(-30, 30)), 6),
            y=round(float(rng.uniform(-2, 3)), 6),
            z=round(float(rng.uniform(1, 70)), 6),
            yaw=round(float(rng.uniform(-3.14, 3.14)), 6),
            score=round(float(rng.random()), 6) if i % 3 == 0 else None,
        ))
    label_text = serialize_kitti_labels(boxes)
    assert parse_kitti_labels(label_text) == boxes
    assert serialize_kitti_labels(parse_kitti_labels(label_text)) == label_text

    # PLY: exporting what an independent parser read back changes nothing.
    ply = export_ply(cloud)
    floats, colors = parse_ply(ply)
    rebuilt = PaintedPointCloud.from_parts(
        floats.astype(np.float64), colors.astype(np.float64) / 255.0)
    assert export_ply(rebuilt) == ply
