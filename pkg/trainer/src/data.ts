/**
 * CIFAR-10 loading, the synthetic stand-in subset, and augmentation.
 *
 * Real data comes from the standard binary batches (one label byte followed
 * by 3072 channel-major pixel bytes per record) in a local directory. When
 * the subset dataset is requested and no binaries exist, a deterministic
 * synthetic CIFAR-shaped dataset is generated instead so the worker can be
 * exercised end-to-end on machines without the real corpus; responses label
 * the source so results are never mistaken for CIFAR-10 accuracy.
 */

import * as fs from "node:fs";
import * as path from "node:path";

export const IMAGE_H = 32;
export const IMAGE_W = 32;
export const IMAGE_C = 3;
export const NUM_CLASSES = 10;
export const PIXELS = IMAGE_H * IMAGE_W * IMAGE_C;

const RECORD_BYTES = 1 + PIXELS;
const TRAIN_FILES = [1, 2, 3, 4, 5].map((i) => `data_batch_${i}.bin`);
const TEST_FILE = "test_batch.bin";

export interface Split {
  /** N x H x W x C, values in [0, 1]. */
  images: Float32Array;
  labels: Uint8Array;
  count: number;
}

export interface Dataset {
  train: Split;
  test: Split;
  source: "cifar10-binaries" | "synthetic";
}

/** Deterministic 32-bit PRNG (mulberry32). */
export function makeRng(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function decodeRecords(buffers: Buffer[], limit?: number): Split {
  const total = buffers.reduce((n, b) => n + b.length / RECORD_BYTES, 0);
  const count = limit === undefined ? total : Math.min(limit, total);
  const images = new Float32Array(count * PIXELS);
  const labels = new Uint8Array(count);
  let record = 0;
  for (const buffer of buffers) {
    const records = buffer.length / RECORD_BYTES;
    for (let r = 0; r < records && record < count; r++, record++) {
      const base = r * RECORD_BYTES;
      labels[record] = buffer[base];
      // channel-major on disk -> HWC in memory
      for (let c = 0; c < IMAGE_C; c++) {
        for (let p = 0; p < IMAGE_H * IMAGE_W; p++) {
          images[record * PIXELS + p * IMAGE_C + c] =
            buffer[base + 1 + c * IMAGE_H * IMAGE_W + p] / 255;
        }
      }
    }
  }
  return { images, labels, count };
}

export function hasBinaries(dir: string): boolean {
  return (
    fs.existsSync(path.join(dir, TEST_FILE)) &&
    TRAIN_FILES.every((f) => fs.existsSync(path.join(dir, f)))
  );
}

function loadBinaries(dir: string, trainLimit?: number, testLimit?: number): Dataset {
  const trainBuffers = TRAIN_FILES.map((f) => fs.readFileSync(path.join(dir, f)));
  const testBuffer = [fs.readFileSync(path.join(dir, TEST_FILE))];
  return {
    train: decodeRecords(trainBuffers, trainLimit),
    test: decodeRecords(testBuffer, testLimit),
    source: "cifar10-binaries",
  };
}

/**
 * Class-structured synthetic images: each class owns a distinct hue and a
 * stripe orientation/frequency, with per-image phase and pixel noise on
 * top. Learnable by a small CNN within an epoch, which is what the smoke
 * path needs.
 */
function syntheticSplit(count: number, rng: () => number): Split {
  const images = new Float32Array(count * PIXELS);
  const labels = new Uint8Array(count);
  for (let r = 0; r < count; r++) {
    const cls = Math.floor(rng() * NUM_CLASSES);
    labels[r] = cls;
    const hue = (cls / NUM_CLASSES) * 2 * Math.PI;
    const baseR = 0.5 + 0.35 * Math.cos(hue);
    const baseG = 0.5 + 0.35 * Math.cos(hue - (2 * Math.PI) / 3);
    const baseB = 0.5 + 0.35 * Math.cos(hue + (2 * Math.PI) / 3);
    const freq = 0.25 + 0.15 * (cls % 5);
    const vertical = cls >= NUM_CLASSES / 2;
    const phase = rng() * Math.PI * 2;
    for (let y = 0; y < IMAGE_H; y++) {
      for (let x = 0; x < IMAGE_W; x++) {
        const stripe = 0.2 * Math.sin((vertical ? y : x) * freq + phase);
        const offset = r * PIXELS + (y * IMAGE_W + x) * IMAGE_C;
        images[offset] = clamp01(baseR + stripe + 0.08 * (rng() - 0.5));
        images[offset + 1] = clamp01(baseG + stripe + 0.08 * (rng() - 0.5));
        images[offset + 2] = clamp01(baseB - stripe + 0.08 * (rng() - 0.5));
      }
    }
  }
  return { images, labels, count };
}

function clamp01(v: number): number {
  return v < 0 ? 0 : v > 1 ? 1 : v;
}

export const SUBSET_TRAIN = 500;
export const SUBSET_TEST = 100;

/**
 * Resolve a dataset tag against a local directory.
 *
 * `cifar10` requires the binary batches. `cifar10-subset` slices them when
 * present and otherwise falls back to the synthetic stand-in.
 */
export function loadDataset(tag: string, dir: string, seed: number): Dataset {
  if (tag === "cifar10") {
    if (!hasBinaries(dir)) {
      throw new Error(
        `dataset cifar10 not available: expected CIFAR-10 binary batches under ${dir}`,
      );
    }
    return loadBinaries(dir);
  }
  if (hasBinaries(dir)) {
    return { ...loadBinaries(dir, SUBSET_TRAIN, SUBSET_TEST), source: "cifar10-binaries" };
  }
  const rng = makeRng(0xc1fa0 + seed);
  return {
    train: syntheticSplit(SUBSET_TRAIN, rng),
    test: syntheticSplit(SUBSET_TEST, rng),
    source: "synthetic",
  };
}

/**
 * Moderate augmentation: 4-pixel zero pad with random crop, plus random
 * horizontal flip. Deterministic given the PRNG state.
 */
export function augmentBatch(split: Split, indices: Int32Array, rng: () => number): Float32Array {
  const out = new Float32Array(indices.length * PIXELS);
  const pad = 4;
  for (let k = 0; k < indices.length; k++) {
    const src = indices[k] * PIXELS;
    const dy = Math.floor(rng() * (2 * pad + 1)) - pad;
    const dx = Math.floor(rng() * (2 * pad + 1)) - pad;
    const flip = rng() < 0.5;
    for (let y = 0; y < IMAGE_H; y++) {
      const sy = y + dy;
      for (let x = 0; x < IMAGE_W; x++) {
        const sx = (flip ? IMAGE_W - 1 - x : x) + dx;
        const dst = k * PIXELS + (y * IMAGE_W + x) * IMAGE_C;
        if (sy >= 0 && sy < IMAGE_H && sx >= 0 && sx < IMAGE_W) {
          const from = src + (sy * IMAGE_W + sx) * IMAGE_C;
          out[dst] = split.images[from];
          out[dst + 1] = split.images[from + 1];
          out[dst + 2] = split.images[from + 2];
        } // else: zero padding
      }
    }
  }
  return out;
}

/** Deterministic Fisher-Yates shuffle of 0..n-1. */
export function shuffledIndices(n: number, rng: () => number): Int32Array {
  const indices = new Int32Array(n);
  for (let i = 0; i < n; i++) indices[i] = i;
  for (let i = n - 1; i > 0; i--) {
    const j = Math.floor(rng() * (i + 1));
    const tmp = indices[i];
    indices[i] = indices[j];
    indices[j] = tmp;
  }
  return indices;
}
