import fs from 'node:fs';
import os from 'node:os';
import path from 'node:path';
import { describe, expect, it } from 'vitest';
import { mergeConfig } from '../src/config.js';
import { runInference, sourcesFromDirectory, sourcesFromSplit, writeInference } from '../src/infer.js';
import { train } from '../src/train.js';

const TREE = path.join(__dirname, 'fixtures', 'ds');

function tmpdir(): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), 'bridge-e2e-'));
}

describe('train/infer end to end', () => {
  it('smoke-trains, checkpoints, resumes, and infers', () => {
    const cfg = mergeConfig({ max_iterations: 6, input_size: 32, batch_size: 4,
                              seed: 11, checkpoint_interval: 3 });
    const out = tmpdir();
    const result = train(cfg, TREE, out);
    expect(fs.existsSync(result.weightsPath)).toBe(true);
    expect(Number.isFinite(result.finalLoss)).toBe(true);

    const lines = fs.readFileSync(result.logPath, 'utf-8').trim().split('\n')
      .map((l) => JSON.parse(l));
    expect(lines.length).toBe(6);
    expect(lines[0].iteration).toBe(1);
    expect(lines.at(-1)!.iteration).toBe(6);
    for (const rec of lines) expect(Number.isFinite(rec.loss)).toBe(true);
    // early iterations should trend above late ones on this easy fixture
    expect(lines[0].loss).toBeGreaterThan(lines.at(-1)!.loss);

    // resume: run 4 more iterations from the final checkpoint of a 6-iter run
    const cfg10 = mergeConfig({ ...cfg, max_iterations: 10 });
    const out2 = tmpdir();
    const resumed = train(cfg10, TREE, out2, result.weightsPath);
    expect(resumed.iterations).toBe(10);
    const resumedLines = fs.readFileSync(resumed.logPath, 'utf-8').trim().split('\n')
      .map((l) => JSON.parse(l));
    expect(resumedLines[0].iteration).toBe(7);
    expect(resumedLines.at(-1)!.iteration).toBe(10);

    // inference over the val split emits schema-shaped records
    const outcome = runInference(result.weightsPath, sourcesFromSplit(TREE, 'val'));
    expect(outcome.results.length).toBe(1);
    expect(outcome.skipped.length).toBe(0);
    const rec = outcome.results[0];
    expect(rec.category_id).toBe(1);
    expect(rec.score).toBeGreaterThanOrEqual(0);
    expect(rec.score).toBeLessThanOrEqual(1);
    expect(rec.bbox[2]).toBeGreaterThan(0);
    expect(rec.bbox[3]).toBeGreaterThan(0);
    expect(rec.bbox[0]).toBeGreaterThanOrEqual(0);
    expect(rec.bbox[1]).toBeGreaterThanOrEqual(0);

    const predPath = path.join(out, 'predictions.json');
    writeInference(outcome, predPath);
    const parsed = JSON.parse(fs.readFileSync(predPath, 'utf-8'));
    expect(Array.isArray(parsed)).toBe(true);
  }, 240_000);

  it('inference is deterministic for fixed weights', () => {
    const cfg = mergeConfig({ max_iterations: 2, input_size: 32, batch_size: 4, seed: 3 });
    const out = tmpdir();
    const result = train(cfg, TREE, out);
    const a = runInference(result.weightsPath, sourcesFromSplit(TREE, 'val'));
    const b = runInference(result.weightsPath, sourcesFromSplit(TREE, 'val'));
    expect(JSON.stringify(a)).toBe(JSON.stringify(b));
  }, 120_000);

  it('empty image directory yields an empty, valid results list', () => {
    const cfg = mergeConfig({ max_iterations: 1, input_size: 32, batch_size: 2, seed: 1 });
    const out = tmpdir();
    const result = train(cfg, TREE, out);
    const emptyDir = tmpdir();
    const outcome = runInference(result.weightsPath, sourcesFromDirectory(emptyDir));
    expect(outcome.results).toEqual([]);
    const p = path.join(out, 'empty.json');
    writeInference(outcome, p);
    expect(JSON.parse(fs.readFileSync(p, 'utf-8'))).toEqual([]);
  }, 120_000);

  it('unreadable images are skipped and recorded', () => {
    const cfg = mergeConfig({ max_iterations: 1, input_size: 32, batch_size: 2, seed: 2 });
    const out = tmpdir();
    const result = train(cfg, TREE, out);
    const dir = tmpdir();
    fs.writeFileSync(path.join(dir, 'broken.png'), 'not a png');
    fs.copyFileSync(path.join(TREE, 'images', 'frame_000000.png'),
                    path.join(dir, 'ok.png'));
    const outcome = runInference(result.weightsPath, sourcesFromDirectory(dir));
    expect(outcome.results.length).toBe(1);
    expect(outcome.skipped).toEqual(['broken.png']);
    const p = path.join(out, 'preds.json');
    writeInference(outcome, p);
    expect(JSON.parse(fs.readFileSync(p.replace('.json', '') + '.skipped.json', 'utf-8')))
      .toEqual(['broken.png']);
  }, 120_000);
});
