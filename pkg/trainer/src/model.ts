import * as tf from '@tensorflow/tfjs';

import { NUM_COLORS, PATCH, TILE_SUMMARY_DIMS, TOKEN_OFFSET, VIEWS } from './data.js';
import { TrainerConfig } from './types.js';

/** Two small convolutional towers (input grid, output grid) bridged into one
 *  feature vector, plus an autoregressive token head: each step sees the
 *  previous token, its position, and the grid-pair features.  Recurrent
 *  layers train far too slowly on a pure-JS backend, so the decoder is a
 *  teacher-forced order-1 head rather than an LSTM; every initializer is
 *  seeded so training is reproducible. */
export function buildModel(vocabLength: number, config: TrainerConfig): tf.LayersModel {
  const channels = NUM_COLORS + 1;
  const vocabSize = vocabLength + TOKEN_OFFSET;
  const stepDims = vocabSize + config.maxLen + 3; // prev token + position + own-tile summary
  let seedCounter = config.seed * 1000 + 1;
  const init = () => tf.initializers.glorotUniform({ seed: seedCounter++ });

  const side = config.gridSize / PATCH;
  const inputGrid = tf.input({
    shape: [side * side, PATCH * PATCH * channels], name: 'input_grid',
  });
  const outputGrid = tf.input({
    shape: [side * side, PATCH * PATCH * (channels + VIEWS)], name: 'output_grid',
  });
  const tileSummaries = tf.input({ shape: [TILE_SUMMARY_DIMS], name: 'tile_summary' });

  // A dense layer over the patch axis is a stride-PATCH convolution computed
  // as one matmul; true conv layers backprop orders of magnitude slower on
  // the pure-JS backend.
  const tower = (name: string, grid: tf.SymbolicTensor) => {
    let x = tf.layers
      .dense({ name: `${name}_patch`, units: 48, activation: 'relu', kernelInitializer: init() })
      .apply(grid) as tf.SymbolicTensor;
    x = tf.layers
      .dense({ name: `${name}_mix`, units: 32, activation: 'relu', kernelInitializer: init() })
      .apply(x) as tf.SymbolicTensor;
    return x;
  };

  const towerIn = tower('enc_in', inputGrid);
  const towerOut = tower('enc_out', outputGrid);
  let merged = tf.layers
    .concatenate({ name: 'bridge' })
    .apply([towerIn, towerOut]) as tf.SymbolicTensor;
  merged = tf.layers.flatten({ name: 'bridge_flat' }).apply(merged) as tf.SymbolicTensor;
  let features = tf.layers
    .dense({ name: 'features_hidden', units: 256, activation: 'relu', kernelInitializer: init() })
    .apply(merged) as tf.SymbolicTensor;
  features = tf.layers
    .dense({ name: 'features', units: config.embeddingSize * 2, activation: 'relu', kernelInitializer: init() })
    .apply(features) as tf.SymbolicTensor;
  features = tf.layers
    .concatenate({ name: 'features_with_tiles' })
    .apply([features, tileSummaries]) as tf.SymbolicTensor;

  const decoderIn = tf.input({ shape: [config.maxLen, stepDims], name: 'decoder_in' });
  const repeated = tf.layers
    .repeatVector({ name: 'feature_repeat', n: config.maxLen })
    .apply(features) as tf.SymbolicTensor;
  const perStep = tf.layers
    .concatenate({ name: 'decoder_concat' })
    .apply([decoderIn, repeated]) as tf.SymbolicTensor;

  // Dense layers broadcast over the time axis as a single matmul, which is
  // much faster on the JS backend than TimeDistributed's per-step loop.
  const hidden = tf.layers
    .dense({ name: 'decoder_hidden', units: 160, activation: 'relu', kernelInitializer: init() })
    .apply(perStep) as tf.SymbolicTensor;
  const logits = tf.layers
    .dense({ name: 'token_head', units: vocabSize, activation: 'softmax', kernelInitializer: init() })
    .apply(hidden) as tf.SymbolicTensor;

  const model = tf.model({
    inputs: [inputGrid, outputGrid, tileSummaries, decoderIn],
    outputs: logits,
  });
  model.compile({
    optimizer: tf.train.adam(2e-3),
    loss: 'categoricalCrossentropy',
  });
  return model;
}
