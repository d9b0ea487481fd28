/**
 * Dataset loading and target preparation.
 *
 * Targets follow the toolkit's availability rule: a triple whose recorded
 * availability misses the target on any zone-of-interest link trains toward
 * all-OFF; the rest train toward their recorded configuration. Features are
 * standardized per feature channel (statistics stored with the model).
 */
import * as tf from '@tensorflow/tfjs';
import { DatasetMeta, DatasetTripleRow, readDataset, readSidecar } from './csv';

export interface Scaler {
  mean: number[];   // one per feature channel
  std: number[];
}

export interface PreparedData {
  x: tf.Tensor4D;            // [n, links, features, 1]
  y: tf.Tensor2D;            // [n, links]
  tripleIds: number[];
  nLinks: number;
  nFeatures: number;
  meta: DatasetMeta;
}

export function effectiveTargets(
  triples: DatasetTripleRow[],
  zoi: number[],
  sDes: number,
): number[][] {
  return triples.map((t) => {
    const fails = zoi.some((j) => t.availability[j] < sDes);
    return fails ? t.labelBits.map(() => 0) : [...t.labelBits];
  });
}

export function fitScaler(triples: DatasetTripleRow[]): Scaler {
  const nFeatures = triples[0].pmob[0].length;
  const mean = new Array(nFeatures).fill(0);
  const sq = new Array(nFeatures).fill(0);
  let count = 0;
  for (const t of triples) {
    for (const row of t.pmob) {
      for (let f = 0; f < nFeatures; f++) {
        mean[f] += row[f];
        sq[f] += row[f] * row[f];
      }
      count++;
    }
  }
  const std = new Array(nFeatures).fill(1);
  for (let f = 0; f < nFeatures; f++) {
    mean[f] /= count;
    const v = sq[f] / count - mean[f] * mean[f];
    std[f] = v > 0 ? Math.sqrt(v) : 1;
  }
  return { mean, std };
}

export function featureTensor(
  triples: DatasetTripleRow[],
  scaler: Scaler,
): tf.Tensor4D {
  const n = triples.length;
  const nLinks = triples[0].pmob.length;
  const nFeatures = triples[0].pmob[0].length;
  const buf = new Float32Array(n * nLinks * nFeatures);
  let k = 0;
  for (const t of triples) {
    for (const row of t.pmob) {
      for (let f = 0; f < nFeatures; f++) {
        buf[k++] = (row[f] - scaler.mean[f]) / scaler.std[f];
      }
    }
  }
  return tf.tensor4d(buf, [n, nLinks, nFeatures, 1]);
}

export function loadTrainingData(
  datasetPath: string,
  maxSamples?: number,
): PreparedData & { scaler: Scaler } {
  const meta = readSidecar(datasetPath);
  if (!meta.zoi.length) {
    throw new Error('dataset sidecar carries no zone of interest');
  }
  let triples = readDataset(datasetPath);
  if (!triples.length) {
    throw new Error('dataset is empty');
  }
  if (maxSamples && triples.length > maxSamples) {
    // strided subsample keeps coverage of every interval in the file
    const stride = Math.ceil(triples.length / maxSamples);
    triples = triples.filter((_, i) => i % stride === 0);
  }
  const targets = effectiveTargets(triples, meta.zoi, meta.sDes);
  const scaler = fitScaler(triples);
  const x = featureTensor(triples, scaler);
  const y = tf.tensor2d(targets.map((r) => r.map(Number)));
  return {
    x,
    y: y as tf.Tensor2D,
    tripleIds: triples.map((t) => t.tripleId),
    nLinks: triples[0].pmob.length,
    nFeatures: triples[0].pmob[0].length,
    meta,
    scaler,
  };
}
