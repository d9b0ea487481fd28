/**
 * Parameter audit at the published full-scale dimensions: a 160x2 input and
 * 162 outputs must reproduce the reference trainable parameter counts
 * exactly (the counts are independent of how the input was reshaped).
 */
import { buildModel, layerParams, LayerParams } from './model';

export const AUDIT_DIMS = { nLinks: 160, nFeatures: 2, nOut: 162 };
export const EXPECTED_PARAMS = [160, 272, 81984, 10530];

export interface AuditResult {
  layers: LayerParams[];
  trainable: number[];
  expected: number[];
  ok: boolean;
}

export function paramsAudit(): AuditResult {
  const model = buildModel(AUDIT_DIMS.nLinks, AUDIT_DIMS.nFeatures, AUDIT_DIMS.nOut);
  const layers = layerParams(model);
  const trainable = layers.map((l) => l.params).filter((p) => p > 0);
  const ok =
    trainable.length === EXPECTED_PARAMS.length &&
    trainable.every((p, i) => p === EXPECTED_PARAMS[i]);
  model.dispose();
  return { layers, trainable, expected: EXPECTED_PARAMS, ok };
}

export function printAudit(result: AuditResult): void {
  console.log('layer audit at full-scale dimensions '
    + `(${AUDIT_DIMS.nLinks}x${AUDIT_DIMS.nFeatures} in, ${AUDIT_DIMS.nOut} out):`);
  for (const l of result.layers) {
    console.log(`  ${l.name.padEnd(14)} ${l.params}`);
  }
  console.log(`trainable counts: ${result.trainable.join(', ')}`);
  console.log(`expected:         ${result.expected.join(', ')}`);
  console.log(result.ok ? 'audit OK' : 'audit MISMATCH');
}
