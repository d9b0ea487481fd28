/**
 * The convolutional architecture: a 3x3 convolution over the link-by-feature
 * matrix, max pooling, a 1x1 convolution, then dense layers ending in one
 * sigmoid per link. A link belongs to the anchor zone when its probability
 * exceeds 0.5.
 */
import * as tf from '@tensorflow/tfjs';

export interface ModelOptions {
  filters?: number;
  denseUnits?: number;
  dropout?: number;
  seed?: number;
}

export interface LayerParams {
  name: string;
  params: number;
}

export function buildModel(
  nLinks: number,
  nFeatures: number,
  nOut: number,
  opts: ModelOptions = {},
): tf.Sequential {
  if (nLinks < 3 || nFeatures < 1) {
    throw new Error(
      `input ${nLinks}x${nFeatures} is too small for the 3x3 kernel`,
    );
  }
  const filters = opts.filters ?? 16;
  const denseUnits = opts.denseUnits ?? 64;
  const dropout = opts.dropout ?? 0.5;
  const seed = opts.seed ?? 0;
  const init = (offset: number) =>
    tf.initializers.glorotUniform({ seed: seed + offset });

  const model = tf.sequential();
  model.add(tf.layers.conv2d({
    inputShape: [nLinks, nFeatures, 1],
    kernelSize: [3, 3],
    filters,
    padding: 'same',
    kernelInitializer: init(1),
  }));
  model.add(tf.layers.activation({ activation: 'relu' }));
  model.add(tf.layers.maxPooling2d({
    poolSize: [2, Math.min(2, nFeatures)],
  }));
  model.add(tf.layers.conv2d({
    kernelSize: [1, 1],
    filters,
    padding: 'same',
    kernelInitializer: init(2),
  }));
  model.add(tf.layers.activation({ activation: 'relu' }));
  model.add(tf.layers.flatten());
  model.add(tf.layers.dense({ units: denseUnits, kernelInitializer: init(3) }));
  model.add(tf.layers.activation({ activation: 'relu' }));
  model.add(tf.layers.dropout({ rate: dropout, seed }));
  model.add(tf.layers.dense({
    units: nOut,
    activation: 'sigmoid',
    kernelInitializer: init(4),
  }));
  return model;
}

export function layerParams(model: tf.Sequential): LayerParams[] {
  return model.layers.map((layer) => ({
    name: layer.getClassName(),
    params: layer.countParams(),
  }));
}

export function thresholdBits(probs: number[][], threshold = 0.5): number[][] {
  return probs.map((row) => row.map((p) => (p > threshold ? 1 : 0)));
}
