export {
  makeClient,
  ShapeMismatchError,
  TextShapeServiceError,
} from "./client.js";
export type { TextShapeApi } from "./client.js";
export {
  DEFAULT_BASE_URL,
  DEFAULT_DEGREE,
  DEFAULT_RAYS,
} from "./types.js";
export type {
  EncodeInstance,
  EncodeOptions,
  Encoding,
  Point,
  RaysOptions,
} from "./types.js";
