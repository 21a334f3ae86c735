/**
 * Line-delimited JSON protocol between the search process and this worker.
 *
 * One request line in, one response line out, strictly in order. A request
 * that cannot be parsed or validated produces an error response; the worker
 * never dies because of a bad request.
 */

export const PROTOCOL_FORMAT = 1;

export const DATASETS = ["cifar10", "cifar10-subset"] as const;
export type DatasetTag = (typeof DATASETS)[number];

export interface ConvLayerJson {
  kind: "conv";
  k: number;
  f: number;
}

export interface PoolLayerJson {
  kind: "pool";
}

export interface FcLayerJson {
  kind: "fc";
  n: number;
}

export type LayerJson = ConvLayerJson | PoolLayerJson | FcLayerJson;

/** Architecture wire format; the softmax classifier head is implied by `classes`. */
export interface ArchitectureJson {
  input: [number, number, number];
  layers: LayerJson[];
  classes: number;
}

export interface TrainRequest {
  format: number;
  arch: ArchitectureJson;
  epochs: number;
  dataset: DatasetTag;
  seed: number;
}

export interface TrainMeta {
  optimizer: string;
  learning_rate: number;
  batch_size: number;
  augmentation: string;
  backend: string;
  dataset_source: string;
  train_images: number;
  validation_images: number;
  validation_error: number;
  test_images: number;
}

export interface SuccessResponse {
  format: typeof PROTOCOL_FORMAT;
  test_error: number;
  train_seconds: number;
  train_meta: TrainMeta;
}

export interface ErrorResponse {
  format: typeof PROTOCOL_FORMAT;
  error: string;
}

export class ProtocolError extends Error {}

function fail(message: string): never {
  throw new ProtocolError(message);
}

function asPositiveInt(value: unknown, name: string): number {
  if (typeof value !== "number" || !Number.isInteger(value) || value < 1) {
    fail(`${name} must be a positive integer, got ${JSON.stringify(value)}`);
  }
  return value;
}

function validateLayer(entry: unknown, index: number): LayerJson {
  if (typeof entry !== "object" || entry === null) {
    fail(`layers[${index}] is not an object`);
  }
  const layer = entry as Record<string, unknown>;
  switch (layer.kind) {
    case "conv":
      return {
        kind: "conv",
        k: asPositiveInt(layer.k, `layers[${index}].k`),
        f: asPositiveInt(layer.f, `layers[${index}].f`),
      };
    case "pool":
      return { kind: "pool" };
    case "fc":
      return { kind: "fc", n: asPositiveInt(layer.n, `layers[${index}].n`) };
    default:
      fail(`layers[${index}] has unknown kind ${JSON.stringify(layer.kind)}`);
  }
}

export function validateArch(value: unknown): ArchitectureJson {
  if (typeof value !== "object" || value === null) {
    fail("arch is not an object");
  }
  const arch = value as Record<string, unknown>;
  if (!Array.isArray(arch.input) || arch.input.length !== 3) {
    fail("arch.input must be [height, width, channels]");
  }
  const input = arch.input.map((v, i) => asPositiveInt(v, `arch.input[${i}]`));
  if (!Array.isArray(arch.layers)) {
    fail("arch.layers must be an array");
  }
  return {
    input: input as [number, number, number],
    layers: arch.layers.map(validateLayer),
    classes: asPositiveInt(arch.classes, "arch.classes"),
  };
}

/** Parse and validate one request line; throws ProtocolError on any defect. */
export function parseRequest(line: string): TrainRequest {
  let raw: unknown;
  try {
    raw = JSON.parse(line);
  } catch (err) {
    fail(`request is not valid JSON: ${(err as Error).message}`);
  }
  if (typeof raw !== "object" || raw === null) {
    fail("request is not a JSON object");
  }
  const req = raw as Record<string, unknown>;
  if (req.format !== PROTOCOL_FORMAT) {
    fail(`unsupported format ${JSON.stringify(req.format)}, expected ${PROTOCOL_FORMAT}`);
  }
  const dataset = req.dataset;
  if (typeof dataset !== "string" || !DATASETS.includes(dataset as DatasetTag)) {
    fail(`dataset must be one of ${DATASETS.join(", ")}, got ${JSON.stringify(dataset)}`);
  }
  const seed = req.seed ?? 0;
  if (typeof seed !== "number" || !Number.isInteger(seed)) {
    fail(`seed must be an integer, got ${JSON.stringify(seed)}`);
  }
  return {
    format: PROTOCOL_FORMAT,
    arch: validateArch(req.arch),
    epochs: asPositiveInt(req.epochs, "epochs"),
    dataset: dataset as DatasetTag,
    seed,
  };
}

export function successResponse(
  testError: number,
  trainSeconds: number,
  meta: TrainMeta,
): string {
  const body: SuccessResponse = {
    format: PROTOCOL_FORMAT,
    test_error: testError,
    train_seconds: trainSeconds,
    train_meta: meta,
  };
  return JSON.stringify(body);
}

export function errorResponse(message: string): string {
  const body: ErrorResponse = { format: PROTOCOL_FORMAT, error: message };
  return JSON.stringify(body);
}
