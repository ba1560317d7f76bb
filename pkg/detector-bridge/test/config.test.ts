import { describe, expect, it } from 'vitest';
import { DEFAULT_CONFIG, mergeConfig, resolveBackbone } from '../src/config.js';

describe('config defaults', () => {
  it('echoes the documented hyperparameters', () => {
    expect(DEFAULT_CONFIG.learning_rate).toBeCloseTo(0.001, 12);
    expect(DEFAULT_CONFIG.max_iterations).toBe(1500);
    expect(DEFAULT_CONFIG.num_classes).toBe(1);
  });

  it('merges overrides and validates', () => {
    const cfg = mergeConfig({ max_iterations: 20, seed: 5 });
    expect(cfg.max_iterations).toBe(20);
    expect(cfg.learning_rate).toBeCloseTo(0.001, 12);
    expect(() => mergeConfig({ learning_rate: 0 })).toThrow(/learning_rate/);
    expect(() => mergeConfig({ max_iterations: 0 })).toThrow(/max_iterations/);
  });

  it('rejects the unbundled heavyweight backbone by name', () => {
    expect(() => resolveBackbone('x101-fpn')).toThrow(/not bundled/);
    expect(() => resolveBackbone('resnet')).toThrow(/unknown backbone/);
    expect(resolveBackbone('small')).toBe('small');
  });
});
