import { strict as assert } from 'node:assert';
import { test } from 'node:test';
import * as tf from '@tensorflow/tfjs';
import { AUDIT_DIMS, EXPECTED_PARAMS, paramsAudit } from '../src/audit';
import { buildModel, thresholdBits } from '../src/model';

test('audit reproduces the reference parameter counts exactly', () => {
  const result = paramsAudit();
  assert.deepEqual(result.trainable, EXPECTED_PARAMS);
  assert.deepEqual(result.trainable, [160, 272, 81984, 10530]);
  assert.ok(result.ok);
});

test('first conv layer alone is 3*3*1*16 + 16 = 160 parameters', () => {
  const result = paramsAudit();
  assert.equal(result.layers[0].params, 3 * 3 * 1 * 16 + 16);
});

test('output dimension follows the requested configuration', () => {
  const model = buildModel(12, 5, 12);
  const out = model.predict(tf.zeros([3, 12, 5, 1])) as tf.Tensor2D;
  assert.deepEqual(out.shape, [3, 12]);
  model.dispose();
  out.dispose();
});

test('sigmoid probabilities stay inside (0, 1)', async () => {
  const model = buildModel(AUDIT_DIMS.nLinks, AUDIT_DIMS.nFeatures, AUDIT_DIMS.nOut);
  const out = model.predict(tf.randomNormal([4, 160, 2, 1], 0, 1, 'float32', 7)) as tf.Tensor2D;
  const values = (await out.array()) as number[][];
  for (const row of values) {
    for (const p of row) {
      assert.ok(p > 0 && p < 1);
    }
  }
  model.dispose();
  out.dispose();
});

test('threshold rule: strictly greater than 0.5 joins the zone', () => {
  assert.deepEqual(thresholdBits([[0.51, 0.49, 0.5]]), [[1, 0, 0]]);
});

test('inputs smaller than the kernel are refused', () => {
  assert.throws(() => buildModel(2, 5, 2), /too small/);
});
