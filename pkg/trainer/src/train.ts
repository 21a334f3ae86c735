/**
 * One training job: build the model, train with augmentation on the train
 * split, hold out a validation slice, and report error on the test split.
 */

import * as tf from "@tensorflow/tfjs";

import { buildModel } from "./arch.js";
import {
  Dataset,
  NUM_CLASSES,
  PIXELS,
  Split,
  augmentBatch,
  loadDataset,
  makeRng,
  shuffledIndices,
} from "./data.js";
import { TrainMeta, TrainRequest } from "./protocol.js";

const LEARNING_RATE = 1e-3;
const FULL_VALIDATION = 5_000;
const SUBSET_VALIDATION = 50;

export interface JobResult {
  testError: number;
  trainSeconds: number;
  meta: TrainMeta;
}

function sliceSplit(split: Split, start: number, count: number): Split {
  return {
    images: split.images.subarray(start * PIXELS, (start + count) * PIXELS),
    labels: split.labels.subarray(start, start + count),
    count,
  };
}

function oneHot(labels: Uint8Array): tf.Tensor2D {
  const out = new Float32Array(labels.length * NUM_CLASSES);
  labels.forEach((label, i) => {
    out[i * NUM_CLASSES + label] = 1;
  });
  return tf.tensor2d(out, [labels.length, NUM_CLASSES]);
}

function imageTensor(images: Float32Array, count: number): tf.Tensor4D {
  return tf.tensor4d(images, [count, 32, 32, 3]);
}

async function accuracy(model: tf.Sequential, split: Split, batch: number): Promise<number> {
  let correct = 0;
  for (let start = 0; start < split.count; start += batch) {
    const count = Math.min(batch, split.count - start);
    const x = imageTensor(
      split.images.subarray(start * PIXELS, (start + count) * PIXELS),
      count,
    );
    const predictions = tf.tidy(() => (model.predict(x) as tf.Tensor2D).argMax(1));
    const predicted = (await predictions.data()) as Int32Array;
    for (let i = 0; i < count; i++) {
      if (predicted[i] === split.labels[start + i]) correct++;
    }
    x.dispose();
    predictions.dispose();
  }
  return correct / split.count;
}

export async function runJob(request: TrainRequest, datasetDir: string): Promise<JobResult> {
  const started = Date.now();
  const dataset: Dataset = loadDataset(request.dataset, datasetDir, request.seed);
  const validationCount =
    request.dataset === "cifar10" ? FULL_VALIDATION : SUBSET_VALIDATION;
  const trainCount = dataset.train.count - validationCount;
  if (trainCount < 1) {
    throw new Error(`dataset too small: ${dataset.train.count} train images`);
  }
  const train = sliceSplit(dataset.train, 0, trainCount);
  const validation = sliceSplit(dataset.train, trainCount, validationCount);
  const batchSize = request.dataset === "cifar10" ? 128 : 32;

  const model = buildModel(request.arch, request.seed);
  model.compile({
    optimizer: tf.train.adam(LEARNING_RATE),
    loss: "categoricalCrossentropy",
    metrics: ["accuracy"],
  });

  const rng = makeRng(0x7e57 + request.seed);
  for (let epoch = 0; epoch < request.epochs; epoch++) {
    const order = shuffledIndices(train.count, rng);
    const images = augmentBatch(train, order, rng);
    const labels = new Uint8Array(train.count);
    order.forEach((src, i) => {
      labels[i] = train.labels[src];
    });
    const x = imageTensor(images, train.count);
    const y = oneHot(labels);
    await model.fit(x, y, { epochs: 1, batchSize, shuffle: false, verbose: 0 });
    x.dispose();
    y.dispose();
  }

  const validationAccuracy = validation.count > 0 ? await accuracy(model, validation, 256) : 0;
  const testAccuracy = await accuracy(model, dataset.test, 256);
  model.dispose();

  return {
    testError: 100 * (1 - testAccuracy),
    trainSeconds: (Date.now() - started) / 1000,
    meta: {
      optimizer: "adam",
      learning_rate: LEARNING_RATE,
      batch_size: batchSize,
      augmentation: "pad4-random-crop+hflip",
      backend: tf.getBackend(),
      dataset_source: dataset.source,
      train_images: train.count,
      validation_images: validation.count,
      validation_error: 100 * (1 - validationAccuracy),
      test_images: dataset.test.count,
    },
  };
}
