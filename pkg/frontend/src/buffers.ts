/**
 * Byte-level helpers: base64 transport, little-endian float32 buffers, and
 * cloud record packing. These implement the same encodings the service and
 * CLI use on disk, so encode/decode here round-trips their bytes exactly.
 */

import type {
  CloudLayout,
  CloudResponse,
  DepthPayload,
  ImagePayload,
  MaskPayload,
} from "./types.js";
import { LAYOUT_STRIDE } from "./types.js";

interface NodeBufferLike {
  readonly buffer: ArrayBufferLike;
  readonly byteOffset: number;
  readonly byteLength: number;
  toString(encoding: "base64"): string;
}

interface NodeBufferCtor {
  from(data: ArrayBufferLike, byteOffset: number, length: number): NodeBufferLike;
  from(data: string, encoding: "base64"): NodeBufferLike;
}

const nodeBuffer = (globalThis as { Buffer?: NodeBufferCtor }).Buffer;

const BTOA_CHUNK = 0x8000;

/** Encode bytes as standard base64 (Node and browser). */
export function bytesToBase64(bytes: Uint8Array): string {
  if (nodeBuffer) {
    return nodeBuffer.from(bytes.buffer, bytes.byteOffset, bytes.byteLength).toString("base64");
  }
  let binary = "";
  for (let i = 0; i < bytes.length; i += BTOA_CHUNK) {
    binary += String.fromCharCode(...bytes.subarray(i, i + BTOA_CHUNK));
  }
  return btoa(binary);
}

/** Decode standard base64 to bytes (Node and browser). */
export function base64ToBytes(text: string): Uint8Array {
  if (nodeBuffer) {
    const decoded = nodeBuffer.from(text, "base64");
    return new Uint8Array(decoded.buffer, decoded.byteOffset, decoded.byteLength);
  }
  const binary = atob(text);
  const bytes = new Uint8Array(binary.length);
  for (let i = 0; i < binary.length; i++) {
    bytes[i] = binary.charCodeAt(i);
  }
  return bytes;
}

/** Pack numbers as little-endian float32, regardless of host endianness. */
export function encodeFloat32LE(values: ArrayLike<number>): Uint8Array {
  const bytes = new Uint8Array(values.length * 4);
  const view = new DataView(bytes.buffer);
  for (let i = 0; i < values.length; i++) {
    view.setFloat32(i * 4, values[i] as number, true);
  }
  return bytes;
}

/** Unpack little-endian float32 bytes, regardless of host endianness. */
export function decodeFloat32LE(bytes: Uint8Array): Float32Array {
  if (bytes.byteLength % 4 !== 0) {
    throw new Error(`float32 buffer length ${bytes.byteLength} is not a multiple of 4`);
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  const values = new Float32Array(bytes.byteLength / 4);
  for (let i = 0; i < values.length; i++) {
    values[i] = view.getFloat32(i * 4, true);
  }
  return values;
}

/** A cloud unpacked from `.bin` bytes: `points` holds count * stride floats. */
export interface DecodedCloud {
  layout: CloudLayout;
  count: number;
  points: Float32Array;
}

/** Unpack `.bin` cloud bytes; rejects lengths that break the record grid. */
export function decodeCloudBytes(bytes: Uint8Array, layout: CloudLayout): DecodedCloud {
  const recordBytes = LAYOUT_STRIDE[layout] * 4;
  if (bytes.byteLength % recordBytes !== 0) {
    throw new Error(
      `cloud data length ${bytes.byteLength} is not a multiple of the ` +
        `${recordBytes}-byte ${layout} record`,
    );
  }
  return {
    layout,
    count: bytes.byteLength / recordBytes,
    points: decodeFloat32LE(bytes),
  };
}

/** Pack per-point floats (count * stride of them) as `.bin` cloud bytes. */
export function encodeCloudBytes(points: ArrayLike<number>, layout: CloudLayout): Uint8Array {
  const stride = LAYOUT_STRIDE[layout];
  if (points.length % stride !== 0) {
    throw new Error(
      `point buffer holds ${points.length} floats, not a multiple of the ${layout} stride ${stride}`,
    );
  }
  return encodeFloat32LE(points);
}

/** Decode a service cloud response; verifies the advertised point count. */
export function cloudFromResponse(response: CloudResponse): DecodedCloud {
  const decoded = decodeCloudBytes(base64ToBytes(response.cloud), response.layout);
  if (decoded.count !== response.count) {
    throw new Error(
      `response advertises ${response.count} points but the payload holds ${decoded.count}`,
    );
  }
  return decoded;
}

/** Build a depth payload from row-major meter values (non-positive = invalid). */
export function depthPayload(
  values: ArrayLike<number>,
  width: number,
  height: number,
): DepthPayload {
  if (values.length !== width * height) {
    throw new Error(`depth buffer holds ${values.length} values, expected ${width * height}`);
  }
  return { data: bytesToBase64(encodeFloat32LE(values)), width, height };
}

/** Build an image payload from row-major uint8 RGB triplets. */
export function imagePayload(pixels: Uint8Array, width: number, height: number): ImagePayload {
  if (pixels.length !== width * height * 3) {
    throw new Error(`image buffer holds ${pixels.length} bytes, expected ${width * height * 3}`);
  }
  return { data: bytesToBase64(pixels), width, height };
}

/** Build a mask payload from row-major uint8 instance ids (0 = background). */
export function maskPayload(ids: Uint8Array, width: number, height: number): MaskPayload {
  if (ids.length !== width * height) {
    throw new Error(`mask buffer holds ${ids.length} bytes, expected ${width * height}`);
  }
  return { data: bytesToBase64(ids), width, height };
}
