/**
 * Training: per-link binary cross-entropy, adaptive-moment optimizer,
 * 100 epochs by default. Weight initialization and dropout are seeded;
 * exact bit-reproducibility across machines is best effort on the pure-JS
 * backend and noted as such.
 */
import * as fs from 'fs';
import * as path from 'path';
import * as tf from '@tensorflow/tfjs';
import { loadTrainingData } from './data';
import { buildModel } from './model';
import { saveModel } from './persist';

export interface TrainOptions {
  epochs?: number;
  seed?: number;
  batchSize?: number;
  learningRate?: number;
  dropout?: number;
  maxSamples?: number;
  /** Extra weight on positive targets. The predictor is deliberately
   * conservative: leaning toward false positives keeps predicted zones
   * supersets of workable ones, which re-simulation never rejects. */
  posWeight?: number;
}


function weightedBce(posWeight: number) {
  return (yTrue: tf.Tensor, yPred: tf.Tensor): tf.Tensor => tf.tidy(() => {
    const eps = 1e-7;
    const p = yPred.clipByValue(eps, 1 - eps);
    const posTerm = yTrue.mul(p.log()).mul(-posWeight);
    const negTerm = tf.sub(1, yTrue).mul(tf.sub(1, p).log()).mul(-1);
    return posTerm.add(negTerm).mean();
  });
}

export interface TrainResult {
  epochs: number;
  nSamples: number;
  finalLoss: number;
  history: number[];
}

export async function train(
  datasetPath: string,
  outDir: string,
  opts: TrainOptions = {},
): Promise<TrainResult> {
  const epochs = opts.epochs ?? 100;
  const seed = opts.seed ?? 0;
  const batchSize = opts.batchSize ?? 64;
  const lr = opts.learningRate ?? 1e-3;
  const posWeight = opts.posWeight ?? 1.0;

  const data = loadTrainingData(datasetPath, opts.maxSamples);
  const model = buildModel(data.nLinks, data.nFeatures, data.nLinks, {
    seed,
    dropout: opts.dropout ?? 0.5,
  });
  model.compile({
    optimizer: tf.train.adam(lr),
    loss: posWeight === 1 ? 'binaryCrossentropy' : weightedBce(posWeight),
  });

  const history: number[] = [];
  await model.fit(data.x, data.y, {
    epochs,
    batchSize,
    shuffle: true,
    verbose: 0,
    callbacks: {
      onEpochEnd: async (_epoch, logs) => {
        const loss = logs?.loss as number;
        if (!Number.isFinite(loss)) {
          throw new Error(
            `training diverged: loss=${loss} at epoch ${history.length + 1} `
            + `(samples=${data.x.shape[0]}, lr=${lr})`,
          );
        }
        history.push(loss);
      },
    },
  });

  await saveModel(model, outDir, {
    nLinks: data.nLinks,
    nFeatures: data.nFeatures,
    threshold: 0.5,
    scaler: data.scaler,
  });
  fs.writeFileSync(
    path.join(outDir, 'history.json'),
    JSON.stringify({ loss: history, epochs, seed, batchSize, lr, posWeight }),
  );
  const result = {
    epochs,
    nSamples: data.x.shape[0],
    finalLoss: history[history.length - 1],
    history,
  };
  data.x.dispose();
  data.y.dispose();
  model.dispose();
  return result;
}
