/** Dataset tree -> training tensors. */

import * as tf from '@tensorflow/tfjs';
import { annotationsByImage, CocoDataset, imagePath, readSplit, Split } from './coco.js';
import { readPngRgb } from './png.js';

export interface LoadedSplit {
  xs: tf.Tensor4D;      // [n, S, S, 3] in [0, 1]
  ys: tf.Tensor2D;      // [n, 5] = cx, cy, w, h, obj (unit square)
  imageIds: number[];
  dataset: CocoDataset;
}

export function loadSplit(tree: string, split: Split, inputSize: number): LoadedSplit {
  const ds = readSplit(tree, split);
  const anns = annotationsByImage(ds);
  const images: tf.Tensor3D[] = [];
  const targets: number[][] = [];
  const imageIds: number[] = [];
  for (const im of ds.images) {
    const png = readPngRgb(imagePath(tree, im.file_name));
    const raw = tf.tensor3d(png.data, [png.height, png.width, 3]);
    const resized = tf.image.resizeBilinear(raw, [inputSize, inputSize]);
    raw.dispose();
    images.push(resized);
    const ann = anns.get(im.id);
    if (ann) {
      const [x, y, w, h] = ann.bbox;
      targets.push([
        (x + w / 2) / im.width,
        (y + h / 2) / im.height,
        w / im.width,
        h / im.height,
        1,
      ]);
    } else {
      targets.push([0, 0, 0, 0, 0]);
    }
    imageIds.push(im.id);
  }
  if (images.length === 0) {
    throw new Error(`split "${split}" contains no images`);
  }
  const xs = tf.stack(images) as tf.Tensor4D;
  images.forEach((t) => t.dispose());
  const ys = tf.tensor2d(targets, [targets.length, 5]);
  return { xs, ys, imageIds, dataset: ds };
}

/** Deterministic shuffled index stream (multiplicative LCG, fixed seed). */
export class BatchSampler {
  private order: number[] = [];
  private cursor = 0;
  private state: number;

  constructor(private n: number, seed: number) {
    this.state = (seed >>> 0) || 0x9e3779b9;
    this.reshuffle();
  }

  private nextRand(): number {
    // Park-Miller
    this.state = (this.state * 48271) % 2147483647;
    return this.state / 2147483647;
  }

  private reshuffle(): void {
    this.order = Array.from({ length: this.n }, (_, i) => i);
    for (let i = this.n - 1; i > 0; i--) {
      const j = Math.floor(this.nextRand() * (i + 1));
      [this.order[i], this.order[j]] = [this.order[j], this.order[i]];
    }
    this.cursor = 0;
  }

  nextBatch(size: number): number[] {
    const out: number[] = [];
    while (out.length < size) {
      if (this.cursor >= this.n) this.reshuffle();
      out.push(this.order[this.cursor++]);
    }
    return out;
  }
}
