/**
 * Inference over a dataset file: per-link probabilities plus the 0.5
 * threshold bits, written in the exchange schema the toolkit's `evaluate`
 * consumes directly.
 */
import * as tf from '@tensorflow/tfjs';
import { readDataset, writePredictions } from './csv';
import { featureTensor } from './data';
import { thresholdBits } from './model';
import { loadModel } from './persist';

export interface PredictResult {
  nTriples: number;
  outPath: string;
}

export async function predictFile(
  modelDir: string,
  datasetPath: string,
  outPath: string,
): Promise<PredictResult> {
  const { model, meta } = await loadModel(modelDir);
  const triples = readDataset(datasetPath);
  if (!triples.length) {
    throw new Error('input dataset is empty');
  }
  if (triples[0].pmob.length !== meta.nLinks
      || triples[0].pmob[0].length !== meta.nFeatures) {
    throw new Error(
      `dimension mismatch: model expects ${meta.nLinks}x${meta.nFeatures}, `
      + `input is ${triples[0].pmob.length}x${triples[0].pmob[0].length}`,
    );
  }
  const x = featureTensor(triples, meta.scaler);
  const out = model.predict(x) as tf.Tensor2D;
  const probs = (await out.array()) as number[][];
  const bits = thresholdBits(probs, meta.threshold);
  writePredictions(outPath, triples.map((t) => t.tripleId), probs, bits);
  x.dispose();
  out.dispose();
  model.dispose();
  return { nTriples: triples.length, outPath };
}
