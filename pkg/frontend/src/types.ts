/**
 * Wire types for the pseudolidar HTTP service.
 *
 * Field names and defaults mirror the service schemas one to one. Bulk
 * numeric payloads travel as base64 of the exact on-disk encodings: clouds
 * are `.bin` bytes (little-endian float32 records), depth buffers are
 * row-major little-endian float32, images and masks are row-major uint8.
 * A service response therefore decodes to the same bytes the CLI writes.
 */

/** Cloud record layouts; the stride is the float count per point. */
export type CloudLayout = "xyz" | "xyzi" | "xyzrgb";

/** Layouts an unpainted cloud may use (projection output, paint input). */
export type UnpaintedLayout = "xyz" | "xyzi";

export const LAYOUT_STRIDE: Readonly<Record<CloudLayout, number>> = {
  xyz: 3,
  xyzi: 4,
  xyzrgb: 6,
};

/** Base64 buffer plus its raster dimensions. */
export interface RasterPayload {
  /** base64 of the row-major buffer */
  data: string;
  width: number;
  height: number;
}

/** Row-major float32 depth in meters; non-positive values are invalid. */
export type DepthPayload = RasterPayload;

/** Row-major uint8 RGB triplets (height x width x 3). */
export type ImagePayload = RasterPayload;

/** Row-major uint8 instance ids (0 = background). */
export type MaskPayload = RasterPayload;

export interface ProjectRequest {
  depth: DepthPayload;
  /** calibration file text (P2 / R0_rect / Tr_velo_to_cam lines) */
  calib: string;
  /** output layout; defaults to "xyz" */
  layout?: UnpaintedLayout;
}

export interface CloudResponse {
  /** base64 `.bin` bytes */
  cloud: string;
  layout: CloudLayout;
  count: number;
}

export interface PaintRequest {
  cloud: string;
  /** input cloud layout; defaults to "xyz" */
  layout?: UnpaintedLayout;
  depth: DepthPayload;
  image: ImagePayload;
  mask?: MaskPayload | null;
}

/** Optional sparsification knobs; unset fields follow the preset. */
export interface SparsifyOverrides {
  preset?: string | null;
  /** sampling seed; integers above 2^53 - 1 are not representable here */
  seed?: number | null;
  /** (azimuth deg, elevation deg, radius m) denoise voxel */
  spherical_voxel?: [number, number, number] | null;
  x_range?: [number, number] | null;
  y_range?: [number, number] | null;
  z_range?: [number, number] | null;
  voxel_size?: [number, number, number] | null;
  max_points_per_voxel?: number | null;
}

export interface SparsifyReport {
  input: number;
  denoised: number;
  filtered: number;
  output: number;
}

export interface SparsifyRequest {
  cloud: string;
  /** input cloud layout; defaults to "xyzrgb" */
  layout?: CloudLayout;
  /** output layout; defaults to the input layout */
  output_layout?: CloudLayout | null;
  config?: SparsifyOverrides | null;
}

export interface SparsifyResponse extends CloudResponse {
  report: SparsifyReport;
}

/** A 3D box in camera frame (y down) or world frame (z up). */
export interface Box {
  label: string;
  x: number;
  y: number;
  z: number;
  height: number;
  width: number;
  length: number;
  /** rotation around the vertical axis, in [-pi, pi] */
  yaw: number;
  truncation?: number;
  occlusion?: number;
  alpha?: number;
  /** 2D image box (left, top, right, bottom), used for difficulty grading */
  bbox?: [number, number, number, number];
  score?: number | null;
}

export type IouMode = "3d" | "bev";
export type BoxFrame = "camera" | "world";
export type DifficultyName = "easy" | "moderate" | "hard";

export interface IouRequest {
  a: Box;
  b: Box;
  /** defaults to "3d" */
  mode?: IouMode;
  /** defaults to "camera" */
  frame?: BoxFrame;
}

export interface IouResponse {
  iou: number;
}

export interface FrameBoxes {
  frame_id: string;
  boxes: Box[];
}

export interface EvalConfig {
  class_label?: string;
  mode?: IouMode;
  iou_threshold?: number;
  difficulty?: DifficultyName;
  frame?: BoxFrame;
  use_dont_care?: boolean;
}

export interface Ap40Request {
  predictions: FrameBoxes[];
  ground_truths: FrameBoxes[];
  config?: EvalConfig;
}

export interface Ap40Response {
  ap: number;
  recalls: number[];
  precisions: number[];
  gt_count: number;
}

export interface HealthResponse {
  status: string;
  version: string;
}
