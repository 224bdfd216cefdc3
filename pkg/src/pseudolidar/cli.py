"""Command-line interface: project, paint, sparsify, pipeline, eval, export-ply.

Exit codes: 0 on success, 1 when some frames of a batch run failed, 2 on
usage or input errors.  Logs go to stderr (one line per frame at info
level; ``--quiet`` keeps only errors); results and reports go to stdout.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import PRESETS, PipelineConfig, parse_config_text, resolve_config
from .errors import InputError, PseudoLidarError
from .metrics import (
    BoxFrame,
    Difficulty,
    EvalConfig,
    EvalMode,
    PrCurve,
    evaluate_directories,
)
from .pcio import CloudLayout, export_ply, read_cloud_bin
from .pipeline import (
    atomic_write_bytes,
    paint_file,
    project_file,
    run_split,
    sparsify_file,
)

logger = logging.getLogger("pseudolidar")

_LAYOUT_CHOICES = [layout.value for layout in CloudLayout]


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", metavar="FILE", help="key = value config file")
    shared.add_argument("--preset", choices=sorted(PRESETS), help="named range/voxel defaults")
    shared.add_argument("--seed", type=int, metavar="U64", help="sampling seed")
    shared.add_argument("--workers", type=int, metavar="N", help="parallel frame workers")
    shared.add_argument("--layout", choices=_LAYOUT_CHOICES, help="output cloud layout")
    shared.add_argument("--force", action="store_true", help="overwrite existing outputs")
    shared.add_argument("--quiet", action="store_true", help="log errors only")

    parser = argparse.ArgumentParser(
        prog="pseudolidar",
        description="Turn monocular depth maps into sparse painted point clouds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("project", parents=[shared],
                       help="back-project a depth map into a point cloud")
    p.add_argument("depth", type=Path)
    p.add_argument("calib", type=Path)
    p.add_argument("output", type=Path)
    p.set_defaults(handler=cmd_project)

    p = sub.add_parser("paint", parents=[shared],
                       help="attach masked image color to a projected cloud")
    p.add_argument("cloud", type=Path)
    p.add_argument("depth", type=Path)
    p.add_argument("image", type=Path)
    p.add_argument("output", type=Path)
    p.add_argument("--mask", type=Path, help="instance-id mask file")
    p.add_argument("--input-layout", choices=["xyz", "xyzi"], default="xyz")
    p.add_argument("--require-masks", action="store_true",
                   help="fail instead of painting background when the mask is missing")
    p.set_defaults(handler=cmd_paint)

    p = sub.add_parser("sparsify", parents=[shared],
                       help="denoise, range-filter, and downsample a cloud")
    p.add_argument("cloud", type=Path)
    p.add_argument("output", type=Path)
    p.add_argument("--input-layout", choices=_LAYOUT_CHOICES, default="xyzrgb")
    p.set_defaults(handler=cmd_sparsify)

    p = sub.add_parser("pipeline", parents=[shared],
                       help="project + paint + sparsify a whole split")
    p.add_argument("--depth-dir", type=Path)
    p.add_argument("--image-dir", type=Path)
    p.add_argument("--mask-dir", type=Path)
    p.add_argument("--calib-dir", type=Path)
    p.add_argument("--output-dir", type=Path)
    p.add_argument("--require-masks", action="store_true")
    p.set_defaults(handler=cmd_pipeline)

    p = sub.add_parser("eval", parents=[shared],
                       help="AP at 40 recall positions over label directories")
    p.add_argument("--gt-dir", type=Path, required=True)
    p.add_argument("--pred-dir", type=Path, required=True)
    p.add_argument("--calib-dir", type=Path,
                   help="evaluate in the world frame via per-frame calibration")
    p.add_argument("--classes", default="Car", help="comma-separated class labels")
    p.add_argument("--modes", default="3d,bev", help="comma-separated: 3d, bev")
    p.add_argument("--thresholds", default="0.7", help="comma-separated IoU thresholds")
    p.add_argument("--difficulties", default="easy,moderate,hard")
    p.add_argument("--no-dont-care", action="store_true",
                   help="score every unmatched prediction as a false positive")
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("export-ply", parents=[shared],
                       help="convert a cloud to a binary PLY for viewers")
    p.add_argument("cloud", type=Path)
    p.add_argument("output", type=Path)
    p.add_argument("--input-layout", choices=_LAYOUT_CHOICES, default="xyzrgb")
    p.set_defaults(handler=cmd_export_ply)

    p = sub.add_parser("serve", parents=[shared], help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(handler=cmd_serve)

    return parser


def _resolve(args: argparse.Namespace, **extra_flags) -> PipelineConfig:
    file_values = None
    if args.config:
        file_values = parse_config_text(Path(args.config).read_text())
    flags: dict[str, object | None] = {
        "preset": args.preset,
        "seed": args.seed,
        "workers": args.workers,
        "layout": args.layout,
    }
    flags.update(extra_flags)
    return resolve_config(file_values, flags)


def cmd_project(args: argparse.Namespace) -> int:
    cfg = _resolve(args, layout=args.layout or "xyz")
    if cfg.layout is CloudLayout.XYZRGB:
        raise InputError("projection produces an unpainted cloud; use xyz or xyzi layout")
    data = project_file(args.depth, args.calib)
    if cfg.layout is CloudLayout.XYZI:
        data = _relayout(data, CloudLayout.XYZ, CloudLayout.XYZI)
    atomic_write_bytes(args.output, data)
    logger.info("%s: %d points", args.output, len(data) // (4 * cfg.layout.stride))
    return 0


def _relayout(data: bytes, src: CloudLayout, dst: CloudLayout) -> bytes:
    from .pcio import write_cloud_bin

    return write_cloud_bin(read_cloud_bin(data, src), dst)


def cmd_paint(args: argparse.Namespace) -> int:
    if args.mask is None and args.require_masks:
        raise InputError(f"no mask given for {args.cloud} and masks are required")
    data = paint_file(
        args.cloud.read_bytes(),
        CloudLayout.from_string(args.input_layout),
        args.depth,
        args.image,
        args.mask,
    )
    out_layout = CloudLayout.from_string(args.layout) if args.layout else CloudLayout.XYZRGB
    if out_layout is not CloudLayout.XYZRGB:
        data = _relayout(data, CloudLayout.XYZRGB, out_layout)
    atomic_write_bytes(args.output, data)
    logger.info("%s: %d points", args.output, len(data) // (4 * out_layout.stride))
    return 0


def cmd_sparsify(args: argparse.Namespace) -> int:
    cfg = _resolve(args)
    data, report = sparsify_file(
        args.cloud.read_bytes(), CloudLayout.from_string(args.input_layout), cfg
    )
    atomic_write_bytes(args.output, data)
    sys.stdout.write(report.to_text())
    return 0


def cmd_pipeline(args: argparse.Namespace) -> int:
    cfg = _resolve(
        args,
        depth_dir=args.depth_dir,
        image_dir=args.image_dir,
        mask_dir=args.mask_dir,
        calib_dir=args.calib_dir,
        output_dir=args.output_dir,
        require_masks=args.require_masks or None,
    )
    result = run_split(cfg, force=args.force)
    logger.info(
        "%d processed, %d skipped, %d failed",
        len(result.processed), len(result.skipped), len(result.failed),
    )
    return 0 if result.ok else 1


def _parse_eval_configs(args: argparse.Namespace) -> list[EvalConfig]:
    try:
        modes = [EvalMode(m.strip().lower()) for m in args.modes.split(",") if m.strip()]
        difficulties = [Difficulty(d.strip().lower())
                        for d in args.difficulties.split(",") if d.strip()]
        thresholds = [float(t) for t in args.thresholds.split(",") if t.strip()]
    except ValueError as exc:
        raise InputError(str(exc)) from None
    classes = [c.strip() for c in args.classes.split(",") if c.strip()]
    if not (modes and difficulties and thresholds and classes):
        raise InputError("eval needs at least one class, mode, threshold, and difficulty")
    frame = BoxFrame.CAMERA if args.calib_dir is None else BoxFrame.WORLD
    return [
        EvalConfig(class_label=cls, mode=mode, iou_threshold=thr, difficulty=diff,
                   frame=frame, use_dont_care=not args.no_dont_care)
        for cls in classes for mode in modes for thr in thresholds for diff in difficulties
    ]


def _format_ap_tables(configs: list[EvalConfig], results: dict[EvalConfig, PrCurve]) -> str:
    lines: list[str] = []
    classes = sorted({c.class_label for c in configs})
    columns = sorted({(c.mode, c.iou_threshold) for c in configs},
                     key=lambda mt: (mt[0].value, mt[1]))
    difficulties = [d for d in Difficulty if any(c.difficulty is d for c in configs)]
    for cls in classes:
        lines.append(f"class {cls} (AP %, 40 recall positions)")
        header = f"{'difficulty':<12}" + "".join(
            f"{f'{m.value}@{t:g}':>12}" for m, t in columns
        )
        lines.append(header)
        for diff in difficulties:
            row = f"{diff.value:<12}"
            for mode, thr in columns:
                match = [c for c in configs
                         if c.class_label == cls and c.mode is mode
                         and c.iou_threshold == thr and c.difficulty is diff]
                row += f"{results[match[0]].ap * 100:>12.2f}" if match else f"{'-':>12}"
            lines.append(row)
    return "".join(line + "\n" for line in lines)


def cmd_eval(args: argparse.Namespace) -> int:
    configs = _parse_eval_configs(args)
    results = evaluate_directories(args.gt_dir, args.pred_dir, configs, args.calib_dir)
    sys.stdout.write(_format_ap_tables(configs, results))
    return 0


def cmd_export_ply(args: argparse.Namespace) -> int:
    from .painting import PaintedPointCloud
    import numpy as np

    cloud = read_cloud_bin(
        args.cloud.read_bytes(), CloudLayout.from_string(args.input_layout)
    )
    if not isinstance(cloud, PaintedPointCloud):
        cloud = PaintedPointCloud.from_parts(cloud.xyz, np.zeros((cloud.count, 3)))
    atomic_write_bytes(args.output, export_ply(cloud))
    logger.info("%s: %d points", args.output, cloud.count)
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .server.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port,
                log_level="warning" if args.quiet else "info")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.ERROR if args.quiet else logging.INFO, format="%(message)s"
    )
    try:
        return args.handler(args)
    except PseudoLidarError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
