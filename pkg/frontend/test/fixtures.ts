/**
 * Fixture frames for the equivalence tests.
 *
 * Frames are generated here (seeded, deterministic) and written in the raw
 * formats the CLI reads: `.f32` depth and `.u8` image/mask buffers with
 * JSON sidecars, plus calibration text. Those raw files are byte-identical
 * to the service's wire payloads, so the tests can feed the exact same
 * bytes to both sides. The CLI is then run per frame to produce the
 * reference outputs for each stage.
 */

import { execFileSync } from "node:child_process";
import { writeFileSync } from "node:fs";
import { join } from "node:path";

import type { CloudLayout, UnpaintedLayout } from "../src/index.js";

export const PYTHON = process.env.PSEUDOLIDAR_PYTHON ?? "python3";

// A real KITTI calibration block (sequence 000000 of the object split).
export const KITTI_CALIB_TEXT = `P2: 7.215377000000e+02 0.000000000000e+00 6.095593000000e+02 4.485728000000e+01 0.000000000000e+00 7.215377000000e+02 1.728540000000e+02 2.163791000000e-01 0.000000000000e+00 0.000000000000e+00 1.000000000000e+00 2.745884000000e-03
R0_rect: 9.999239000000e-01 9.837760000000e-03 -7.445048000000e-03 -9.869795000000e-03 9.999421000000e-01 -4.278459000000e-03 7.402527000000e-03 4.351614000000e-03 9.999631000000e-01
Tr_velo_to_cam: 7.533745000000e-03 -9.999714000000e-01 -6.166020000000e-04 -4.069766000000e-03 1.480249000000e-02 7.280733000000e-04 -9.998902000000e-01 -7.631618000000e-02 9.998621000000e-01 7.523790000000e-03 1.480755000000e-02 -2.717806000000e-01
`;

export interface FrameSpec {
  name: string;
  width: number;
  height: number;
  /** sparsification sampling seed, passed to the CLI and the service */
  seed: number;
  /** generator seed for the frame's content */
  rngSeed: number;
  projectLayout: UnpaintedLayout;
  outputLayout: CloudLayout;
  hasMask: boolean;
}

const OUTPUT_LAYOUTS: readonly CloudLayout[] = ["xyzrgb", "xyz", "xyzi"];

export const FRAME_SPECS: readonly FrameSpec[] = Array.from({ length: 20 }, (_, i) => ({
  name: `frame_${String(i).padStart(2, "0")}`,
  width: 16 + (i % 5) * 6,
  height: 12 + (i % 4) * 4,
  seed: 1000 + i,
  rngSeed: 7700 + i,
  projectLayout: i % 2 === 0 ? ("xyz" as const) : ("xyzi" as const),
  outputLayout: OUTPUT_LAYOUTS[i % 3] as CloudLayout,
  hasMask: i % 5 !== 4,
}));

export interface FramePaths {
  depth: string;
  image: string;
  mask: string;
  calib: string;
  projected: string;
  painted: string;
  sparse: string;
}

export function framePaths(dir: string, spec: FrameSpec): FramePaths {
  return {
    depth: join(dir, `${spec.name}.depth.f32`),
    image: join(dir, `${spec.name}.image.u8`),
    mask: join(dir, `${spec.name}.mask.u8`),
    calib: join(dir, `${spec.name}.calib.txt`),
    projected: join(dir, `${spec.name}.projected.bin`),
    painted: join(dir, `${spec.name}.painted.bin`),
    sparse: join(dir, `${spec.name}.sparse.bin`),
  };
}

/** Small deterministic RNG (mulberry32); returns floats in [0, 1). */
export function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/**
 * Row-major float32 depth in meters, 0 = invalid.
 *
 * Scattered valid pixels plus a few constant-depth rectangles. With the
 * KITTI calibration these small frames sit near the image corner, which
 * bounds usable depth: past ~4.2 m the back-projected points rise above
 * the default crop box. Depths stay in [0.5, 4.0] so projected points
 * survive the range filter, and the constant patches put many points into
 * single sampling voxels so the seed genuinely selects survivors.
 */
export function makeDepth(rand: () => number, width: number, height: number): Float32Array {
  const depth = new Float32Array(width * height);
  for (let i = 0; i < depth.length; i++) {
    depth[i] = rand() < 0.35 ? Math.fround(0.5 + rand() * 3.5) : 0;
  }
  for (let patch = 0; patch < 3; patch++) {
    const patchWidth = Math.max(3, Math.floor(width * (0.2 + rand() * 0.25)));
    const patchHeight = Math.max(3, Math.floor(height * (0.2 + rand() * 0.25)));
    const left = Math.floor(rand() * (width - patchWidth));
    const top = Math.floor(rand() * (height - patchHeight));
    const value = Math.fround(2.5 + rand() * 1.5);
    for (let y = top; y < top + patchHeight; y++) {
      for (let x = left; x < left + patchWidth; x++) {
        depth[y * width + x] = value;
      }
    }
  }
  return depth;
}

/** Row-major uint8 RGB triplets. */
export function makeImage(rand: () => number, width: number, height: number): Uint8Array {
  const pixels = new Uint8Array(width * height * 3);
  for (let i = 0; i < pixels.length; i++) {
    pixels[i] = Math.floor(rand() * 256);
  }
  return pixels;
}

/** Row-major uint8 instance ids in 0..3 (0 = background). */
export function makeMask(rand: () => number, width: number, height: number): Uint8Array {
  const ids = new Uint8Array(width * height);
  for (let i = 0; i < ids.length; i++) {
    ids[i] = Math.floor(rand() * 4);
  }
  return ids;
}

function writeSidecar(path: string, width: number, height: number): void {
  writeFileSync(`${path}.json`, JSON.stringify({ width, height }) + "\n");
}

function float32LeBytes(values: Float32Array): Uint8Array {
  const bytes = new Uint8Array(values.length * 4);
  const view = new DataView(bytes.buffer);
  for (let i = 0; i < values.length; i++) {
    view.setFloat32(i * 4, values[i] as number, true);
  }
  return bytes;
}

/** Write one frame's inputs in the raw formats the CLI reads. */
export function writeFrame(dir: string, spec: FrameSpec): void {
  const rand = mulberry32(spec.rngSeed);
  const paths = framePaths(dir, spec);
  writeFileSync(paths.depth, float32LeBytes(makeDepth(rand, spec.width, spec.height)));
  writeSidecar(paths.depth, spec.width, spec.height);
  writeFileSync(paths.image, makeImage(rand, spec.width, spec.height));
  writeSidecar(paths.image, spec.width, spec.height);
  if (spec.hasMask) {
    writeFileSync(paths.mask, makeMask(rand, spec.width, spec.height));
    writeSidecar(paths.mask, spec.width, spec.height);
  }
  writeFileSync(paths.calib, KITTI_CALIB_TEXT);
}

function runCli(args: string[]): void {
  execFileSync(PYTHON, ["-m", "pseudolidar", ...args], {
    stdio: ["ignore", "ignore", "inherit"],
  });
}

/** Produce the CLI reference outputs for every stage of one frame. */
export function runCliStages(dir: string, spec: FrameSpec): void {
  const paths = framePaths(dir, spec);
  runCli([
    "project", paths.depth, paths.calib, paths.projected,
    "--layout", spec.projectLayout, "--quiet",
  ]);
  runCli([
    "paint", paths.projected, paths.depth, paths.image, paths.painted,
    "--input-layout", spec.projectLayout,
    ...(spec.hasMask ? ["--mask", paths.mask] : []),
    "--quiet",
  ]);
  runCli([
    "sparsify", paths.painted, paths.sparse,
    "--seed", String(spec.seed), "--layout", spec.outputLayout, "--quiet",
  ]);
}
