/**
 * Model persistence for the pure-JS backend: topology and weight manifest as
 * JSON, weights as a raw binary blob, plus the feature scaler.
 */
import * as fs from 'fs';
import * as path from 'path';
import * as tf from '@tensorflow/tfjs';
import { Scaler } from './data';

export interface ModelBundleMeta {
  nLinks: number;
  nFeatures: number;
  threshold: number;
  scaler: Scaler;
}

export async function saveModel(
  model: tf.LayersModel,
  dir: string,
  meta: ModelBundleMeta,
): Promise<void> {
  fs.mkdirSync(dir, { recursive: true });
  await model.save(tf.io.withSaveHandler(async (artifacts) => {
    fs.writeFileSync(
      path.join(dir, 'model.json'),
      JSON.stringify({
        modelTopology: artifacts.modelTopology,
        weightSpecs: artifacts.weightSpecs,
      }),
    );
    const data = artifacts.weightData as ArrayBuffer;
    fs.writeFileSync(path.join(dir, 'weights.bin'), Buffer.from(data));
    return { modelArtifactsInfo: { dateSaved: new Date(), modelTopologyType: 'JSON' } };
  }));
  fs.writeFileSync(path.join(dir, 'bundle.json'), JSON.stringify(meta));
}

export async function loadModel(
  dir: string,
): Promise<{ model: tf.LayersModel; meta: ModelBundleMeta }> {
  const doc = JSON.parse(fs.readFileSync(path.join(dir, 'model.json'), 'utf8'));
  const weights = fs.readFileSync(path.join(dir, 'weights.bin'));
  const buffer = weights.buffer.slice(
    weights.byteOffset, weights.byteOffset + weights.byteLength,
  );
  const model = await tf.loadLayersModel(
    tf.io.fromMemory({
      modelTopology: doc.modelTopology,
      weightSpecs: doc.weightSpecs,
      weightData: buffer,
    }),
  );
  const meta = JSON.parse(
    fs.readFileSync(path.join(dir, 'bundle.json'), 'utf8'),
  ) as ModelBundleMeta;
  return { model, meta };
}
