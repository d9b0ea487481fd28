/**
 * File exchange with the fcaz toolkit: dataset CSV (one row per triple and
 * link, with a JSON metadata sidecar) and the prediction CSV consumed by
 * `fcaz evaluate --predictions`.
 */
import * as fs from 'fs';

export const DATASET_HEADER =
  'triple_id,link_id,n_vehicles,nu,lambda,t_lambda,tx,v_c,availability,label_bit';
export const PREDICTION_HEADER = 'triple_id,link_id,probability,bit';

export interface DatasetTripleRow {
  tripleId: number;
  /** [links][5] mobility block: n_vehicles, nu, lambda, t_lambda, tx */
  pmob: number[][];
  availability: number[];
  labelBits: number[];
}

export interface DatasetMeta {
  nLinks: number;
  sDes: number;
  zoi: number[];
  labelPolicy: string;
  raw: Record<string, unknown>;
}

export function sidecarPath(datasetPath: string): string {
  return datasetPath + '.meta.json';
}

export function readSidecar(datasetPath: string): DatasetMeta {
  const doc = JSON.parse(fs.readFileSync(sidecarPath(datasetPath), 'utf8'));
  const scenario = (doc.scenario ?? {}) as Record<string, any>;
  const zoi: number[] = scenario.network?.grid?.zoi ?? [];
  return {
    nLinks: doc.n_links,
    sDes: doc.s_des,
    zoi,
    labelPolicy: doc.label_policy ?? 'applied',
    raw: doc,
  };
}

export function readDataset(path: string): DatasetTripleRow[] {
  const text = fs.readFileSync(path, 'utf8');
  const lines = text.split('\n');
  if (lines[0] !== DATASET_HEADER) {
    throw new Error(`unexpected dataset header: ${lines[0]}`);
  }
  const triples: DatasetTripleRow[] = [];
  let cur: DatasetTripleRow | null = null;
  for (let i = 1; i < lines.length; i++) {
    const line = lines[i];
    if (!line) continue;
    const parts = line.split(',');
    if (parts.length !== 10) {
      throw new Error(`line ${i + 1}: expected 10 columns`);
    }
    const tripleId = Number(parts[0]);
    if (cur === null || tripleId !== cur.tripleId) {
      cur = { tripleId, pmob: [], availability: [], labelBits: [] };
      triples.push(cur);
    }
    cur.pmob.push([
      Number(parts[2]), Number(parts[3]), Number(parts[4]),
      Number(parts[5]), Number(parts[6]),
    ]);
    cur.availability.push(Number(parts[8]));
    cur.labelBits.push(Number(parts[9]));
  }
  return triples;
}

function fmt(x: number): string {
  return Number(x.toPrecision(9)).toString();
}

export function writePredictions(
  path: string,
  tripleIds: number[],
  probs: number[][],
  bits: number[][],
): void {
  const out: string[] = [PREDICTION_HEADER];
  for (let i = 0; i < tripleIds.length; i++) {
    for (let l = 0; l < probs[i].length; l++) {
      out.push(`${tripleIds[i]},${l},${fmt(probs[i][l])},${bits[i][l]}`);
    }
  }
  fs.writeFileSync(path, out.join('\n') + '\n');
}

export function readPredictions(
  path: string,
  nLinks: number,
): { tripleIds: number[]; probs: number[][]; bits: number[][] } {
  const lines = fs.readFileSync(path, 'utf8').split('\n');
  if (lines[0] !== PREDICTION_HEADER) {
    throw new Error(`unexpected prediction header: ${lines[0]}`);
  }
  const tripleIds: number[] = [];
  const probs: number[][] = [];
  const bits: number[][] = [];
  for (let i = 1; i < lines.length; i++) {
    if (!lines[i]) continue;
    const [tid, lid, p, b] = lines[i].split(',');
    const t = Number(tid);
    if (!tripleIds.length || t !== tripleIds[tripleIds.length - 1]) {
      tripleIds.push(t);
      probs.push(new Array(nLinks).fill(NaN));
      bits.push(new Array(nLinks).fill(0));
    }
    probs[probs.length - 1][Number(lid)] = Number(p);
    bits[bits.length - 1][Number(lid)] = Number(b);
  }
  return { tripleIds, probs, bits };
}
