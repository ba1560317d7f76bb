/**
 * detector-bridge CLI
 *
 *   print-config                                  echo the training defaults
 *   train  --dataset <tree> --out <dir> [--iterations N] [--lr F] [--seed N]
 *          [--backbone tiny|small] [--batch-size N] [--input-size N]
 *          [--resume <weights.json>]
 *   infer  --weights <weights.json> --out <predictions.json>
 *          (--dataset <tree> --split train|val | --images <dir>)
 */

import { parseArgs } from 'node:util';
import { DEFAULT_CONFIG, mergeConfig, resolveBackbone, TrainConfig } from './config.js';

function fail(msg: string): never {
  console.error(`error: ${msg}`);
  process.exit(2);
}

async function cmdPrintConfig(): Promise<void> {
  console.log(JSON.stringify(DEFAULT_CONFIG, null, 2));
}

async function cmdTrain(argv: string[]): Promise<void> {
  const { values } = parseArgs({
    args: argv,
    options: {
      dataset: { type: 'string' },
      out: { type: 'string' },
      iterations: { type: 'string' },
      lr: { type: 'string' },
      seed: { type: 'string' },
      backbone: { type: 'string' },
      'batch-size': { type: 'string' },
      'input-size': { type: 'string' },
      resume: { type: 'string' },
    },
  });
  if (!values.dataset || !values.out) fail('train requires --dataset and --out');
  const overrides: Partial<TrainConfig> = {};
  if (values.iterations) overrides.max_iterations = Number(values.iterations);
  if (values.lr) overrides.learning_rate = Number(values.lr);
  if (values.seed) overrides.seed = Number(values.seed);
  if (values.backbone) overrides.backbone = resolveBackbone(values.backbone);
  if (values['batch-size']) overrides.batch_size = Number(values['batch-size']);
  if (values['input-size']) overrides.input_size = Number(values['input-size']);
  let cfg: TrainConfig;
  try {
    cfg = mergeConfig(overrides);
  } catch (err) {
    fail((err as Error).message);
  }
  const { train } = await import('./train.js');
  const result = train(cfg, values.dataset, values.out, values.resume);
  console.log(JSON.stringify({
    weights: result.weightsPath,
    log: result.logPath,
    iterations: result.iterations,
    final_loss: result.finalLoss,
  }));
}

async function cmdInfer(argv: string[]): Promise<void> {
  const { values } = parseArgs({
    args: argv,
    options: {
      weights: { type: 'string' },
      dataset: { type: 'string' },
      split: { type: 'string' },
      images: { type: 'string' },
      out: { type: 'string' },
    },
  });
  if (!values.weights || !values.out) fail('infer requires --weights and --out');
  if (!values.dataset && !values.images) fail('infer needs --dataset/--split or --images');
  const { runInference, sourcesFromDirectory, sourcesFromSplit, writeInference } =
    await import('./infer.js');
  const sources = values.dataset
    ? sourcesFromSplit(values.dataset, (values.split ?? 'val') as 'train' | 'val')
    : sourcesFromDirectory(values.images!);
  const outcome = runInference(values.weights, sources);
  writeInference(outcome, values.out);
  console.log(JSON.stringify({
    predictions: values.out,
    images: outcome.results.length,
    skipped: outcome.skipped.length,
  }));
}

async function main(): Promise<void> {
  const [command, ...rest] = process.argv.slice(2);
  try {
    switch (command) {
      case 'print-config':
        await cmdPrintConfig();
        break;
      case 'train':
        await cmdTrain(rest);
        break;
      case 'infer':
        await cmdInfer(rest);
        break;
      default:
        fail(`unknown command "${command ?? ''}"; use print-config, train, or infer`);
    }
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    process.exit(1);
  }
}

main();
