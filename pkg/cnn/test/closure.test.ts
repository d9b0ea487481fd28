/**
 * Pipeline closure with the Python toolkit, coupled only through files and
 * its command line: generate a desk-scale dataset, train the baseline
 * models and this CNN on the same training file, push every model's
 * prediction file through `evaluate`, and compare.
 *
 * Gate: CNN held-out micro F-score within 0.05 of the best baseline, and
 * rejection probability at most 1.5x the best baseline's.
 */
import { strict as assert } from 'node:assert';
import { test } from 'node:test';
import { execFileSync } from 'node:child_process';
import * as fs from 'node:fs';
import * as os from 'node:os';
import * as path from 'node:path';
import { train } from '../src/train';
import { predictFile } from '../src/predict';

const REPO = path.resolve(__dirname, '..', '..');
const PYTHON = process.env.FCAZ_PYTHON ?? 'python3';

function fcaz(args: string[], cwd: string): any {
  const out = execFileSync(PYTHON, ['-m', 'fcaz.cli', ...args], {
    cwd, encoding: 'utf8', maxBuffer: 1 << 26,
  });
  return JSON.parse(out.trim().split('\n').pop() as string);
}

function writeScenario(dir: string, nIntervals: number): string {
  const doc = {
    arrival_rate: 0.8,
    duration: nIntervals * 300.0,
    dt: 1.0,
    interval: 300.0,
    tx: 120.0,
    seeding_fraction: 0.4,
    cruise_speed: [16.67, 16.67],
    rng_seed: 11,
    s_des: 0.8,
    k_weight: 1.0,
    network: { grid: { rows: 2, cols: 2, link_length: 100.0,
                       speed_limit: [13.89, 13.89], zoi: [5] } },
  };
  const p = path.join(dir, 'scenario.json');
  fs.writeFileSync(p, JSON.stringify(doc));
  return p;
}

test('closure: CNN matches the baselines through the file interface', async () => {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'fcaz-closure-'));
  const scenario = writeScenario(dir, 60);
  const trainCsv = path.join(dir, 'train.csv');
  const testCsv = path.join(dir, 'test.csv');

  // same intervals (same scenario seed), disjoint strategy samples
  fcaz(['gen-dataset', '--scenario', scenario, '--strategies', '120',
        '--fraction-min', '0.45', '--label-policy', 'optimal',
        '--out', trainCsv], REPO);
  fcaz(['gen-dataset', '--scenario', scenario, '--strategies', '12',
        '--fraction-min', '0.45', '--label-policy', 'optimal',
        '--out', testCsv], REPO);

  const baselines: Record<string, { fscore: number; rejection: number }> = {};
  for (const kind of ['knn', 'tree', 'forest']) {
    const model = path.join(dir, `${kind}.npz`);
    fcaz(['train', '--dataset', trainCsv, '--model', kind, '--out', model], REPO);
    const preds = path.join(dir, `${kind}_preds.csv`);
    fcaz(['predict', '--dataset', testCsv, '--model-file', model,
          '--out', preds], REPO);
    const report = fcaz(['evaluate', '--dataset', testCsv,
                         '--predictions', preds], REPO).report;
    baselines[kind] = {
      fscore: report.fscore,
      rejection: report.rejection_probability,
    };
  }

  // strided slice keeps every interval while fitting the pure-JS backend's
  // throughput; epochs stay at the 100-iteration default. The positive-class
  // weight biases errors toward false positives: predicted zones lean toward
  // supersets of workable ones, which re-simulation never rejects.
  const modelDir = path.join(dir, 'cnn_model');
  const trained = await train(trainCsv, modelDir, {
    epochs: 100, seed: 0, maxSamples: 1200, posWeight: 2.0,
  });
  assert.ok(trained.finalLoss < trained.history[0]);

  const cnnPreds = path.join(dir, 'cnn_preds.csv');
  await predictFile(modelDir, testCsv, cnnPreds);
  const cnnReport = fcaz(['evaluate', '--dataset', testCsv,
                          '--predictions', cnnPreds], REPO).report;

  const bestF = Math.max(...Object.values(baselines).map((b) => b.fscore));
  const bestRej = Math.min(...Object.values(baselines).map((b) => b.rejection));
  console.log('baselines:', JSON.stringify(baselines));
  console.log('cnn:', JSON.stringify({
    fscore: cnnReport.fscore,
    rejection: cnnReport.rejection_probability,
    saved: cnnReport.resources_saved,
  }));

  assert.ok(
    cnnReport.fscore >= bestF - 0.05,
    `cnn F ${cnnReport.fscore} below best baseline ${bestF} - 0.05`,
  );
  assert.ok(
    cnnReport.rejection_probability <= 1.5 * bestRej + 1e-12,
    `cnn rejection ${cnnReport.rejection_probability} above 1.5x ${bestRej}`,
  );
});
