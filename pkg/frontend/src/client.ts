/**
 * Fetch-based client for the pseudolidar HTTP service.
 *
 * Every method maps to one endpoint and returns the parsed JSON body.
 * Non-2xx responses throw {@link ApiError}: the service answers domain
 * errors with 400 and a string `detail`, and malformed request shapes
 * (missing or unknown fields) with 422 and a structured `detail`.
 */

import type {
  Ap40Request,
  Ap40Response,
  CloudResponse,
  HealthResponse,
  IouRequest,
  IouResponse,
  PaintRequest,
  ProjectRequest,
  SparsifyRequest,
  SparsifyResponse,
} from "./types.js";

export class ApiError extends Error {
  readonly status: number;
  readonly detail: unknown;

  constructor(status: number, detail: unknown) {
    super(typeof detail === "string" ? detail : `HTTP ${status}: ${JSON.stringify(detail)}`);
    this.name = "ApiError";
    this.status = status;
    this.detail = detail;
  }
}

export interface ClientOptions {
  /** Replacement fetch, e.g. for tests or custom dispatch. */
  fetchImpl?: typeof fetch;
}

export class PseudoLidarClient {
  private readonly baseUrl: string;
  private readonly fetchImpl: typeof fetch;

  constructor(baseUrl: string, options: ClientOptions = {}) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    // Wrap the global so the call never depends on a `this` binding.
    this.fetchImpl = options.fetchImpl ?? ((input, init) => fetch(input, init));
  }

  health(): Promise<HealthResponse> {
    return this.request("GET", "/health");
  }

  /** Back-project a depth buffer through a calibration into a cloud. */
  project(request: ProjectRequest): Promise<CloudResponse> {
    return this.request("POST", "/v1/project", request);
  }

  /** Color an unpainted cloud from its source image and instance mask. */
  paint(request: PaintRequest): Promise<CloudResponse> {
    return this.request("POST", "/v1/paint", request);
  }

  /** Denoise, crop, and cap a cloud; returns the cloud and stage counts. */
  sparsify(request: SparsifyRequest): Promise<SparsifyResponse> {
    return this.request("POST", "/v1/sparsify", request);
  }

  /** Rotated-box overlap, volumetric ("3d") or footprint ("bev"). */
  iou(request: IouRequest): Promise<IouResponse> {
    return this.request("POST", "/v1/iou", request);
  }

  /** Average precision at 40 recall positions over per-frame box lists. */
  ap40(request: Ap40Request): Promise<Ap40Response> {
    return this.request("POST", "/v1/ap40", request);
  }

  private async request<T>(method: "GET" | "POST", path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers: body === undefined ? undefined : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    let parsed: unknown = null;
    if (text) {
      try {
        parsed = JSON.parse(text);
      } catch {
        parsed = text;
      }
    }
    if (!response.ok) {
      const detail =
        parsed !== null && typeof parsed === "object" && "detail" in parsed
          ? (parsed as { detail: unknown }).detail
          : parsed;
      throw new ApiError(response.status, detail);
    }
    return parsed as T;
  }
}
