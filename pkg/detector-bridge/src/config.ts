/**
 * Training configuration and defaults.
 *
 * Kept free of tfjs imports so `print-config` stays fast and silent.
 */

export type Backbone = 'tiny' | 'small';

export interface TrainConfig {
  learning_rate: number;
  max_iterations: number;
  num_classes: 1; // single-class detector by construction
  backbone: Backbone;
  input_size: number;
  batch_size: number;
  checkpoint_interval: number;
  log_interval: number;
  seed: number;
}

export const DEFAULT_CONFIG: TrainConfig = {
  learning_rate: 0.001,
  max_iterations: 1500,
  num_classes: 1,
  backbone: 'tiny',
  input_size: 64,
  batch_size: 8,
  checkpoint_interval: 250,
  log_interval: 1,
  seed: 0,
};

export function resolveBackbone(name: string): Backbone {
  if (name === 'tiny' || name === 'small') return name;
  if (name === 'x101-fpn') {
    throw new Error(
      'backbone "x101-fpn" needs an external GPU training stack and is not bundled; ' +
      'use "tiny" or "small"',
    );
  }
  throw new Error(`unknown backbone "${name}"; choices: tiny, small`);
}

export function mergeConfig(overrides: Partial<TrainConfig>): TrainConfig {
  const cfg = { ...DEFAULT_CONFIG, ...overrides };
  if (!(cfg.learning_rate > 0)) throw new Error(`learning_rate must be > 0, got ${cfg.learning_rate}`);
  if (!(cfg.max_iterations >= 1)) throw new Error(`max_iterations must be >= 1, got ${cfg.max_iterations}`);
  if (cfg.num_classes !== 1) throw new Error('num_classes is fixed at 1');
  if (!(cfg.batch_size >= 1)) throw new Error('batch_size must be >= 1');
  resolveBackbone(cfg.backbone);
  return cfg;
}
