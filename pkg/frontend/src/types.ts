/** A point in the image plane. */
export type Point = readonly [number, number];

/** One contour instance as a flat [x0, y0, x1, y1, ...] vertex list. */
export interface EncodeInstance {
  readonly points: readonly number[];
  /**
   * Vertex index splitting the outline into a top chain [0, split) and
   * a bottom chain [split, n), when the annotation provides paired
   * boundaries.  Omit (or null) to derive the center from the polygon
   * alone.
   */
  readonly pairingSplit?: number | null;
}

/** A fitted contour: coefficient vector, scale and text center. */
export interface Encoding {
  readonly coeffs: readonly number[];
  readonly scale: number;
  readonly center: Point;
}

export interface RaysOptions {
  /** Number of sampling rays; defaults to 360 (the CLI default). */
  readonly rays?: number;
}

export interface EncodeOptions extends RaysOptions {
  /** Fitting degree; defaults to 44 (the CLI default). */
  readonly degree?: number;
}

export const DEFAULT_RAYS = 360;
export const DEFAULT_DEGREE = 44;
export const DEFAULT_BASE_URL = "http://127.0.0.1:8008";
