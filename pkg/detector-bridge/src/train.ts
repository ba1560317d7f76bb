/**
 * Training loop: Adam on the detection loss with JSONL logging and periodic
 * checkpoints. Resuming from a checkpoint continues its iteration counter,
 * so the final iteration count always equals max_iterations.
 */

import * as tf from '@tensorflow/tfjs';
import fs from 'node:fs';
import path from 'node:path';
import { TrainConfig } from './config.js';
import { BatchSampler, loadSplit } from './data.js';
import { buildModel, detectionLoss, loadWeights, saveWeights } from './model.js';

export interface TrainResult {
  weightsPath: string;
  logPath: string;
  finalLoss: number;
  iterations: number;
}

export function train(cfg: TrainConfig, tree: string, outDir: string,
                      resumeFrom?: string): TrainResult {
  const { xs, ys } = loadSplit(tree, 'train', cfg.input_size);
  let model: tf.LayersModel;
  let startIteration = 0;
  if (resumeFrom) {
    const loaded = loadWeights(resumeFrom);
    model = loaded.model;
    startIteration = loaded.file.iteration;
    if (loaded.file.input_size !== cfg.input_size || loaded.file.backbone !== cfg.backbone) {
      throw new Error('checkpoint architecture does not match the requested config');
    }
  } else {
    model = buildModel(cfg.backbone, cfg.input_size, cfg.seed);
  }

  fs.mkdirSync(outDir, { recursive: true });
  const logPath = path.join(outDir, 'train_log.jsonl');
  const weightsPath = path.join(outDir, 'weights.json');
  if (!resumeFrom) fs.writeFileSync(logPath, '');

  const optimizer = tf.train.adam(cfg.learning_rate);
  const sampler = new BatchSampler(xs.shape[0], cfg.seed + startIteration);
  const vars = model.trainableWeights.map((w) => w.read() as tf.Variable);

  let finalLoss = NaN;
  for (let it = startIteration + 1; it <= cfg.max_iterations; it++) {
    const idx = sampler.nextBatch(Math.min(cfg.batch_size, xs.shape[0]));
    const lossVal = tf.tidy(() => {
      const batchX = tf.gather(xs, idx);
      const batchY = tf.gather(ys, idx) as tf.Tensor2D;
      const l = optimizer.minimize(
        () => detectionLoss(model.apply(batchX, { training: true }) as tf.Tensor2D, batchY),
        true, vars as unknown as tf.Variable[],
      ) as tf.Scalar;
      return l.dataSync()[0];
    });
    finalLoss = lossVal;
    if (!Number.isFinite(lossVal)) {
      throw new Error(`non-finite loss at iteration ${it}`);
    }
    if (it % cfg.log_interval === 0 || it === cfg.max_iterations) {
      fs.appendFileSync(logPath, JSON.stringify({
        iteration: it,
        loss: lossVal,
        learning_rate: cfg.learning_rate,
        time: new Date().toISOString(),
      }) + '\n');
    }
    if (it % cfg.checkpoint_interval === 0) {
      saveWeights(model, cfg, it, weightsPath);
    }
  }
  saveWeights(model, cfg, cfg.max_iterations, weightsPath);
  xs.dispose();
  ys.dispose();
  optimizer.dispose();
  return { weightsPath, logPath, finalLoss, iterations: cfg.max_iterations };
}
