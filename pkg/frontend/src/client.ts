import {
  DEFAULT_BASE_URL,
  DEFAULT_DEGREE,
  DEFAULT_RAYS,
  EncodeInstance,
  EncodeOptions,
  Encoding,
  Point,
  RaysOptions,
} from "./types.js";

/** Raised locally when a batch is ragged or misaligned, before any
 * request is sent. */
export class ShapeMismatchError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ShapeMismatchError";
  }
}

/** Raised when the service answers with an error body. */
export class TextShapeServiceError extends Error {
  readonly status: number;
  /** Server-side error class name, e.g. "InvalidPolygon". */
  readonly code: string;

  constructor(status: number, code: string, detail: string) {
    super(`${code}: ${detail}`);
    this.name = "TextShapeServiceError";
    this.status = status;
    this.code = code;
  }
}

/** The six batched operations, all pure: inputs are never mutated and
 * results arrive in input order. */
export interface TextShapeApi {
  batchedContentLoss(
    preds: readonly (readonly number[])[],
    targets: readonly (readonly number[])[],
    options?: RaysOptions,
  ): Promise<number[]>;
  batchedContentLossGrad(
    preds: readonly (readonly number[])[],
    targets: readonly (readonly number[])[],
    options?: RaysOptions,
  ): Promise<number[][]>;
  batchedEncode(
    instances: readonly EncodeInstance[],
    options?: EncodeOptions,
  ): Promise<Encoding[]>;
  batchedDecode(
    encodings: readonly Encoding[],
    options?: RaysOptions,
  ): Promise<number[][]>;
  batchedCentralWeight(
    points: readonly Point[],
    centers: readonly Point[],
    scales: readonly number[],
  ): Promise<number[]>;
  batchedRedistributeWeights(
    weightRows: readonly (readonly number[])[],
  ): Promise<number[][]>;
}

function checkRectangular(
  name: string,
  rows: readonly (readonly number[])[],
): void {
  const first = rows[0];
  if (first === undefined) {
    throw new ShapeMismatchError(`${name} must hold at least one row`);
  }
  for (const row of rows) {
    if (row.length !== first.length) {
      throw new ShapeMismatchError(
        `${name} is ragged: row lengths ${first.length} and ${row.length}`,
      );
    }
  }
}

function checkAligned(
  preds: readonly (readonly number[])[],
  targets: readonly (readonly number[])[],
): void {
  if (preds.length !== targets.length) {
    throw new ShapeMismatchError(
      `batch sizes differ: ${preds.length} preds vs ${targets.length} targets`,
    );
  }
  checkRectangular("preds", preds);
  checkRectangular("targets", targets);
  if (preds[0]!.length !== targets[0]!.length) {
    throw new ShapeMismatchError(
      `coefficient counts differ: ${preds[0]!.length} vs ${targets[0]!.length}`,
    );
  }
}

function checkBroadcast(
  name: string,
  values: readonly unknown[],
  batch: number,
): void {
  if (values.length !== 1 && values.length !== batch) {
    throw new ShapeMismatchError(
      `${name} must hold 1 or ${batch} entries, got ${values.length}`,
    );
  }
}

/**
 * Build a client for a running textshape service.
 *
 * Every method issues plain JSON requests; float64 values survive the
 * round trip exactly, so results match the service bit for bit.
 */
export function makeClient(
  baseUrl: string = DEFAULT_BASE_URL,
  fetchImpl: typeof fetch = fetch,
): TextShapeApi {
  const root = baseUrl.replace(/\/+$/, "");

  const post = async <T>(path: string, body: unknown): Promise<T> => {
    const response = await fetchImpl(`${root}/api/v1${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    const payload: unknown = await response.json();
    if (!response.ok) {
      const record = payload as { error?: string; detail?: unknown };
      throw new TextShapeServiceError(
        response.status,
        record.error ?? "HTTPError",
        typeof record.detail === "string"
          ? record.detail
          : JSON.stringify(record.detail ?? payload),
      );
    }
    return payload as T;
  };

  return {
    async batchedContentLoss(preds, targets, options = {}) {
      checkAligned(preds, targets);
      const body = await post<{ losses: number[] }>("/content-loss", {
        preds,
        targets,
        rays: options.rays ?? DEFAULT_RAYS,
        with_gradients: false,
      });
      return body.losses;
    },

    async batchedContentLossGrad(preds, targets, options = {}) {
      checkAligned(preds, targets);
      const body = await post<{ gradients: number[][] }>("/content-loss", {
        preds,
        targets,
        rays: options.rays ?? DEFAULT_RAYS,
        with_gradients: true,
      });
      return body.gradients;
    },

    async batchedEncode(instances, options = {}) {
      if (instances.length === 0) {
        throw new ShapeMismatchError("instances must hold at least one row");
      }
      const body = await post<{ encodings: Encoding[] }>("/encode", {
        instances: instances.map((instance) => ({
          points: instance.points,
          pairing_split: instance.pairingSplit ?? null,
        })),
        rays: options.rays ?? DEFAULT_RAYS,
        degree: options.degree ?? DEFAULT_DEGREE,
        with_fidelity: false,
      });
      return body.encodings;
    },

    async batchedDecode(encodings, options = {}) {
      if (encodings.length === 0) {
        throw new ShapeMismatchError("encodings must hold at least one row");
      }
      const body = await post<{ polygons: number[][] }>("/decode", {
        encodings,
        rays: options.rays ?? DEFAULT_RAYS,
      });
      return body.polygons;
    },

    async batchedCentralWeight(points, centers, scales) {
      if (points.length === 0) {
        throw new ShapeMismatchError("points must hold at least one entry");
      }
      checkBroadcast("centers", centers, points.length);
      checkBroadcast("scales", scales, points.length);
      const body = await post<{ weights: number[] }>("/central-weight", {
        points,
        centers,
        scales,
      });
      return body.weights;
    },

    async batchedRedistributeWeights(weightRows) {
      if (weightRows.length === 0) {
        throw new ShapeMismatchError("weightRows must hold at least one row");
      }
      const bodies = await Promise.all(
        weightRows.map((weights) =>
          post<{ q: number[] }>("/redistribute-weights", { weights }),
        ),
      );
      return bodies.map((body) => body.q);
    },
  };
}
