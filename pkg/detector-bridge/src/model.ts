/**
 * Single-object detector: a small convnet regressing one box plus an
 * objectness score. Output is [cx, cy, w, h, obj], all sigmoid-squashed and
 * normalized to the unit square; boxes are rescaled to pixels at inference.
 */

import * as tf from '@tensorflow/tfjs';
import fs from 'node:fs';
import path from 'node:path';
import { Backbone, TrainConfig } from './config.js';

const BACKBONE_WIDTHS: Record<Backbone, { convs: number[]; dense: number }> = {
  tiny: { convs: [8, 16, 32], dense: 64 },
  small: { convs: [16, 32, 64], dense: 128 },
};

export function buildModel(backbone: Backbone, inputSize: number, seed: number): tf.LayersModel {
  const { convs, dense } = BACKBONE_WIDTHS[backbone];
  const model = tf.sequential();
  convs.forEach((filters, i) => {
    model.add(tf.layers.conv2d({
      inputShape: i === 0 ? [inputSize, inputSize, 3] : undefined,
      filters,
      kernelSize: 3,
      strides: 2,
      padding: 'same',
      activation: 'relu',
      kernelInitializer: tf.initializers.glorotUniform({ seed: seed + i }),
      biasInitializer: 'zeros',
    }));
  });
  model.add(tf.layers.flatten());
  model.add(tf.layers.dense({
    units: dense,
    activation: 'relu',
    kernelInitializer: tf.initializers.glorotUniform({ seed: seed + 100 }),
  }));
  model.add(tf.layers.dense({
    units: 5,
    activation: 'sigmoid',
    kernelInitializer: tf.initializers.glorotUniform({ seed: seed + 200 }),
  }));
  return model;
}

/** BCE on objectness plus box MSE gated by the object flag. */
export function detectionLoss(pred: tf.Tensor2D, target: tf.Tensor2D): tf.Scalar {
  return tf.tidy(() => {
    const predBox = pred.slice([0, 0], [-1, 4]);
    const predObj = pred.slice([0, 4], [-1, 1]).clipByValue(1e-6, 1 - 1e-6);
    const gtBox = target.slice([0, 0], [-1, 4]);
    const gtObj = target.slice([0, 4], [-1, 1]);
    const objLoss = tf.losses.logLoss(gtObj, predObj);
    const boxSq = predBox.sub(gtBox).square().mean(1, true).mul(gtObj);
    const denom = tf.maximum(gtObj.sum(), 1);
    const boxLoss = boxSq.sum().div(denom);
    return objLoss.add(boxLoss.mul(4)).asScalar();
  });
}

export interface WeightsFile {
  backbone: Backbone;
  input_size: number;
  iteration: number;
  config: TrainConfig;
  weights: { shape: number[]; values: string }[]; // base64 float32 LE
}

export function saveWeights(model: tf.LayersModel, cfg: TrainConfig,
                            iteration: number, outPath: string): void {
  const weights = model.getWeights().map((w) => {
    const data = w.dataSync() as Float32Array;
    return {
      shape: w.shape.slice(),
      values: Buffer.from(data.buffer, data.byteOffset, data.byteLength).toString('base64'),
    };
  });
  const file: WeightsFile = {
    backbone: cfg.backbone,
    input_size: cfg.input_size,
    iteration,
    config: cfg,
    weights,
  };
  fs.mkdirSync(path.dirname(outPath), { recursive: true });
  fs.writeFileSync(outPath, JSON.stringify(file) + '\n');
}

export function loadWeights(weightsPath: string): { model: tf.LayersModel; file: WeightsFile } {
  const file = JSON.parse(fs.readFileSync(weightsPath, 'utf-8')) as WeightsFile;
  const model = buildModel(file.backbone, file.input_size, file.config?.seed ?? 0);
  const tensors = file.weights.map((w) => {
    const buf = Buffer.from(w.values, 'base64');
    const arr = new Float32Array(buf.buffer, buf.byteOffset, buf.byteLength / 4);
    return tf.tensor(Array.from(arr), w.shape);
  });
  model.setWeights(tensors);
  tensors.forEach((t) => t.dispose());
  return { model, file };
}
