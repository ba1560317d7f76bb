/** PNG loading for dataset images (8-bit RGB/RGBA/grayscale). */

import fs from 'node:fs';
import { PNG } from 'pngjs';

export interface RgbImage {
  width: number;
  height: number;
  /** Row-major RGB float32 in [0, 1], length = width * height * 3. */
  data: Float32Array;
}

export function readPngRgb(filePath: string): RgbImage {
  const buf = fs.readFileSync(filePath);
  const png = PNG.sync.read(buf); // -> RGBA, 8 bit
  const { width, height } = png;
  const out = new Float32Array(width * height * 3);
  for (let i = 0; i < width * height; i++) {
    out[i * 3 + 0] = png.data[i * 4 + 0] / 255;
    out[i * 3 + 1] = png.data[i * 4 + 1] / 255;
    out[i * 3 + 2] = png.data[i * 4 + 2] / 255;
  }
  return { width, height, data: out };
}
