"""FastAPI application: one endpoint per core operation.

Endpoints wrap the same pure functions as the CLI; request clouds arrive
and leave as base64 `.bin` bytes, so responses match CLI output files byte
for byte.  Domain errors map to HTTP 400 with a detail message; malformed
request shapes are rejected by validation with 422.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..calib import extrinsics_from_kitti, intrinsics_from_p2, parse_kitti_calib
from ..config import resolve_config
from ..errors import InputError, PseudoLidarError
from ..metrics import BoxFrame, Difficulty, EvalConfig, EvalMode, ap40, bev_iou, iou_3d
from ..painting import InstanceMaskSet, PaintedPointCloud, paint_points
from ..pcio import CloudLayout, read_cloud_bin, write_cloud_bin
from ..projection import depth_to_pseudolidar, valid_pixel_provenance
from ..sparsify import sparsify
from .. import __version__
from . import schemas as s


def _enum(kind, value: str, what: str):
    try:
        return kind(value)
    except ValueError:
        choices = ", ".join(m.value for m in kind)
        raise InputError(f"{what} must be one of {choices}, got {value!r}") from None


def create_app() -> FastAPI:
    app = FastAPI(title="pseudolidar", version=__version__)

    @app.exception_handler(PseudoLidarError)
    async def domain_error(_: Request, exc: PseudoLidarError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/health", response_model=s.HealthResponse)
    def health() -> s.HealthResponse:
        return s.HealthResponse(status="ok", version=__version__)

    @app.post("/v1/project", response_model=s.CloudResponse)
    def project(req: s.ProjectRequest) -> s.CloudResponse:
        layout = CloudLayout.from_string(req.layout)
        if layout is CloudLayout.XYZRGB:
            raise InputError("projection produces an unpainted cloud; use xyz or xyzi layout")
        depth = req.depth.to_depth_map()
        calib = parse_kitti_calib(req.calib)
        cloud, _ = depth_to_pseudolidar(
            depth, intrinsics_from_p2(calib), extrinsics_from_kitti(calib)
        )
        data = write_cloud_bin(cloud, layout)
        return s.CloudResponse(
            cloud=s.encode_base64(data), layout=layout.value, count=cloud.count
        )

    @app.post("/v1/paint", response_model=s.CloudResponse)
    def paint(req: s.PaintRequest) -> s.CloudResponse:
        layout = CloudLayout.from_string(req.layout)
        if layout is CloudLayout.XYZRGB:
            raise InputError("painting expects an unpainted cloud (xyz or xyzi layout)")
        cloud = read_cloud_bin(s.decode_base64("cloud", req.cloud), layout)
        depth = req.depth.to_depth_map()
        provenance = valid_pixel_provenance(depth)
        if provenance.count != cloud.count:
            raise InputError(
                f"cloud has {cloud.count} points but the depth map has "
                f"{provenance.count} valid pixels; not the cloud's source depth?"
            )
        image = req.image.to_image()
        if req.mask is None:
            masks = InstanceMaskSet(
                foreground=np.zeros((depth.height, depth.width), dtype=bool)
            )
        else:
            masks = req.mask.to_masks()
        painted = paint_points(cloud, provenance, image, masks)
        data = write_cloud_bin(painted, CloudLayout.XYZRGB)
        return s.CloudResponse(
            cloud=s.encode_base64(data), layout=CloudLayout.XYZRGB.value, count=painted.count
        )

    @app.post("/v1/sparsify", response_model=s.SparsifyResponse)
    def sparsify_endpoint(req: s.SparsifyRequest) -> s.SparsifyResponse:
        layout = CloudLayout.from_string(req.layout)
        overrides = req.config.model_dump(exclude_none=True) if req.config else {}
        cfg = resolve_config(flag_values=overrides)
        cloud = read_cloud_bin(s.decode_base64("cloud", req.cloud), layout)
        if not isinstance(cloud, PaintedPointCloud):
            cloud = PaintedPointCloud.from_parts(cloud.xyz, np.zeros((cloud.count, 3)))
        sparse, report = sparsify(cloud, cfg.sparsify)
        out_layout = CloudLayout.from_string(req.output_layout) if req.output_layout else layout
        data = write_cloud_bin(sparse, out_layout)
        return s.SparsifyResponse(
            cloud=s.encode_base64(data),
            layout=out_layout.value,
            count=sparse.count,
            report=s.SparsifyReport(
                input=report.input_count,
                denoised=report.denoised_count,
                filtered=report.filtered_count,
                output=report.output_count,
            ),
        )

    @app.post("/v1/iou", response_model=s.IouResponse)
    def iou(req: s.IouRequest) -> s.IouResponse:
        frame = _enum(BoxFrame, req.frame, "frame")
        mode = _enum(EvalMode, req.mode, "mode")
        fn = bev_iou if mode is EvalMode.BEV else iou_3d
        return s.IouResponse(iou=fn(req.a.to_box(), req.b.to_box(), frame))

    @app.post("/v1/ap40", response_model=s.Ap40Response)
    def ap40_endpoint(req: s.Ap40Request) -> s.Ap40Response:
        cfg = EvalConfig(
            class_label=req.config.class_label,
            mode=_enum(EvalMode, req.config.mode, "mode"),
            iou_threshold=req.config.iou_threshold,
            difficulty=_enum(Difficulty, req.config.difficulty, "difficulty"),
            frame=_enum(BoxFrame, req.config.frame, "frame"),
            use_dont_care=req.config.use_dont_care,
        )
        preds = [(f.frame_id, [b.to_box() for b in f.boxes]) for f in req.predictions]
        gts = [(f.frame_id, [b.to_box() for b in f.boxes]) for f in req.ground_truths]
        curve = ap40(preds, gts, cfg)
        return s.Ap40Response(
            ap=curve.ap,
            recalls=list(curve.recalls),
            precisions=list(curve.precisions),
            gt_count=curve.gt_count,
        )

    return app
