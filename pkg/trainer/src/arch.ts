/**
 * Architecture JSON -> trainable tfjs model.
 *
 * Convolutions are stride-1 same-padding with batch normalization and ReLU;
 * pools are 2x2 stride-2 max pools (same padding, so odd extents round up);
 * FC layers are ReLU; the softmax classifier head is appended from `classes`.
 * Weight initializers are seeded per layer so runs are repeatable.
 */

import * as tf from "@tensorflow/tfjs";

import { ArchitectureJson } from "./protocol.js";

export function buildModel(arch: ArchitectureJson, seed: number): tf.Sequential {
  const model = tf.sequential();
  let flat = false;
  let layerSeed = seed;

  const nextSeed = () => ++layerSeed;

  arch.layers.forEach((layer, index) => {
    const first = index === 0;
    if (layer.kind === "conv") {
      if (flat) {
        throw new Error(`layers[${index}]: conv after a fully-connected layer`);
      }
      model.add(
        tf.layers.conv2d({
          filters: layer.f,
          kernelSize: layer.k,
          strides: 1,
          padding: "same",
          useBias: false, // the following batch norm owns the shift
          kernelInitializer: tf.initializers.glorotUniform({ seed: nextSeed() }),
          ...(first ? { inputShape: arch.input } : {}),
        }),
      );
      model.add(tf.layers.batchNormalization({}));
      model.add(tf.layers.activation({ activation: "relu" }));
    } else if (layer.kind === "pool") {
      if (flat) {
        throw new Error(`layers[${index}]: pool after a fully-connected layer`);
      }
      model.add(
        tf.layers.maxPooling2d({
          poolSize: 2,
          strides: 2,
          padding: "same",
          ...(first ? { inputShape: arch.input } : {}),
        }),
      );
    } else {
      if (!flat) {
        model.add(
          first ? tf.layers.flatten({ inputShape: arch.input }) : tf.layers.flatten(),
        );
        flat = true;
      }
      model.add(
        tf.layers.dense({
          units: layer.n,
          activation: "relu",
          kernelInitializer: tf.initializers.glorotUniform({ seed: nextSeed() }),
        }),
      );
    }
  });

  if (!flat) {
    model.add(
      arch.layers.length === 0
        ? tf.layers.flatten({ inputShape: arch.input })
        : tf.layers.flatten(),
    );
  }
  model.add(
    tf.layers.dense({
      units: arch.classes,
      activation: "softmax",
      kernelInitializer: tf.initializers.glorotUniform({ seed: nextSeed() }),
    }),
  );
  return model;
}
