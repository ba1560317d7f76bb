/**
 * Inference over a dataset split (or a bare image directory), producing COCO
 * results JSON: [{image_id, category_id, bbox, score}].
 */

import * as tf from '@tensorflow/tfjs';
import fs from 'node:fs';
import path from 'node:path';
import { imagePath, readSplit, ResultRecord, Split, writeResults } from './coco.js';
import { loadWeights } from './model.js';
import { readPngRgb, RgbImage } from './png.js';

export interface InferSource {
  /** Original pixel size + id; file resolved by the caller. */
  id: number;
  filePath: string;
  width?: number;
  height?: number;
}

export interface InferOutcome {
  results: ResultRecord[];
  skipped: string[];
}

export function sourcesFromSplit(tree: string, split: Split): InferSource[] {
  const ds = readSplit(tree, split);
  return ds.images.map((im) => ({
    id: im.id,
    filePath: imagePath(tree, im.file_name),
    width: im.width,
    height: im.height,
  }));
}

/** Bare directory: ids assigned 1..n over the sorted file names. */
export function sourcesFromDirectory(dir: string): InferSource[] {
  const names = fs.readdirSync(dir).filter((n) => n.toLowerCase().endsWith('.png')).sort();
  return names.map((n, i) => ({ id: i + 1, filePath: path.join(dir, n) }));
}

export function runInference(weightsPath: string, sources: InferSource[]): InferOutcome {
  const { model, file } = loadWeights(weightsPath);
  const size = file.input_size;
  const results: ResultRecord[] = [];
  const skipped: string[] = [];
  for (const src of sources) {
    let png: RgbImage;
    try {
      png = readPngRgb(src.filePath);
    } catch (err) {
      console.warn(`skipping unreadable image ${src.filePath}: ${(err as Error).message}`);
      skipped.push(path.basename(src.filePath));
      continue;
    }
    const w = src.width ?? png.width;
    const h = src.height ?? png.height;
    const pred = tf.tidy(() => {
      const raw = tf.tensor3d(png.data, [png.height, png.width, 3]);
      const resized = tf.image.resizeBilinear(raw, [size, size]).expandDims(0);
      return (model.predict(resized) as tf.Tensor2D).dataSync();
    });
    const [cx, cy, bw, bh, obj] = pred;
    const boxW = Math.max(bw * w, 0.01);
    const boxH = Math.max(bh * h, 0.01);
    const x = Math.min(Math.max(cx * w - boxW / 2, 0), Math.max(w - boxW, 0));
    const y = Math.min(Math.max(cy * h - boxH / 2, 0), Math.max(h - boxH, 0));
    results.push({
      image_id: src.id,
      category_id: 1,
      bbox: [round4(x), round4(y), round4(boxW), round4(boxH)],
      score: round4(Math.min(Math.max(obj, 0), 1)),
    });
  }
  return { results, skipped };
}

function round4(v: number): number {
  return Math.round(v * 10000) / 10000;
}

export function writeInference(outcome: InferOutcome, outPath: string): void {
  writeResults(outcome.results, outPath);
  if (outcome.skipped.length > 0) {
    const skipPath = outPath.replace(/\.json$/, '') + '.skipped.json';
    fs.writeFileSync(skipPath, JSON.stringify(outcome.skipped, null, 2) + '\n');
  }
}
