/**
 * Entry point: `params-audit`, `train`, `predict`.
 *
 *   tsx src/cli.ts params-audit
 *   tsx src/cli.ts train --dataset data.csv --out model_dir [--epochs 100]
 *                        [--seed 0] [--batch-size 64] [--max-samples N]
 *                        [--lr 0.001] [--pos-weight 2]
 *   tsx src/cli.ts predict --model model_dir --dataset test.csv --out preds.csv
 */
import { paramsAudit, printAudit } from './audit';
import { predictFile } from './predict';
import { train } from './train';

function parseFlags(argv: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    if (!argv[i].startsWith('--') || argv[i + 1] === undefined) {
      throw new Error(`bad arguments near ${argv[i]}`);
    }
    flags.set(argv[i].slice(2), argv[i + 1]);
  }
  return flags;
}

function required(flags: Map<string, string>, name: string): string {
  const v = flags.get(name);
  if (v === undefined) {
    throw new Error(`missing required flag --${name}`);
  }
  return v;
}

async function main(): Promise<number> {
  const [command, ...rest] = process.argv.slice(2);
  if (command === 'params-audit') {
    const result = paramsAudit();
    printAudit(result);
    return result.ok ? 0 : 1;
  }
  if (command === 'train') {
    const flags = parseFlags(rest);
    const result = await train(required(flags, 'dataset'), required(flags, 'out'), {
      epochs: flags.has('epochs') ? Number(flags.get('epochs')) : undefined,
      seed: flags.has('seed') ? Number(flags.get('seed')) : undefined,
      batchSize: flags.has('batch-size') ? Number(flags.get('batch-size')) : undefined,
      maxSamples: flags.has('max-samples') ? Number(flags.get('max-samples')) : undefined,
      learningRate: flags.has('lr') ? Number(flags.get('lr')) : undefined,
      posWeight: flags.has('pos-weight') ? Number(flags.get('pos-weight')) : undefined,
    });
    console.log(JSON.stringify({
      samples: result.nSamples,
      epochs: result.epochs,
      final_loss: result.finalLoss,
    }));
    return 0;
  }
  if (command === 'predict') {
    const flags = parseFlags(rest);
    const result = await predictFile(
      required(flags, 'model'),
      required(flags, 'dataset'),
      required(flags, 'out'),
    );
    console.log(JSON.stringify({ predictions: result.nTriples, out: result.outPath }));
    return 0;
  }
  console.error('usage: cli.ts <params-audit|train|predict> [flags]');
  return 2;
}

main().then(
  (code) => process.exit(code),
  (err) => {
    console.error(`error: ${err.message}`);
    process.exit(1);
  },
);
