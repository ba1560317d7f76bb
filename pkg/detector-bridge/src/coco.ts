/**
 * Readers for the generated dataset tree (the pipeline's on-disk contract):
 *
 *   <tree>/images/*.png
 *   <tree>/annotations/{train,val}.json   COCO images/annotations/categories
 */

import fs from 'node:fs';
import path from 'node:path';

export interface CocoImage {
  id: number;
  file_name: string;
  width: number;
  height: number;
}

export interface CocoAnnotation {
  id: number;
  image_id: number;
  category_id: number;
  bbox: [number, number, number, number];
  area: number;
}

export interface CocoDataset {
  images: CocoImage[];
  annotations: CocoAnnotation[];
  categories: { id: number; name: string }[];
}

export interface ResultRecord {
  image_id: number;
  category_id: number;
  bbox: [number, number, number, number];
  score: number;
}

export type Split = 'train' | 'val';

export function readSplit(tree: string, split: Split): CocoDataset {
  const p = path.join(tree, 'annotations', `${split}.json`);
  if (!fs.existsSync(p)) {
    throw new Error(`dataset tree is missing ${p}`);
  }
  const data = JSON.parse(fs.readFileSync(p, 'utf-8')) as CocoDataset;
  for (const key of ['images', 'annotations', 'categories'] as const) {
    if (!Array.isArray(data[key])) throw new Error(`${p}: missing "${key}" list`);
  }
  return data;
}

export function imagePath(tree: string, fileName: string): string {
  return path.join(tree, 'images', fileName);
}

/** First annotation per image id (the generator emits at most one). */
export function annotationsByImage(ds: CocoDataset): Map<number, CocoAnnotation> {
  const map = new Map<number, CocoAnnotation>();
  for (const ann of ds.annotations) {
    if (!map.has(ann.image_id)) map.set(ann.image_id, ann);
  }
  return map;
}

export function writeResults(records: ResultRecord[], outPath: string): void {
  fs.mkdirSync(path.dirname(outPath), { recursive: true });
  fs.writeFileSync(outPath, JSON.stringify(records, null, 2) + '\n');
}
