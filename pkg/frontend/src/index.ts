export * from "./types.js";
export * from "./buffers.js";
export * from "./client.js";
