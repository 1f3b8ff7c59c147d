import * as tf from '@tensorflow/tfjs';

import {
  alignmentChannels,
  encodeGrid,
  tileSummary,
  NUM_COLORS,
  PAD_ID,
  PATCH,
  SOS_ID,
  TILE_SUMMARY_DIMS,
  TOKEN_OFFSET,
  VIEWS,
} from './data.js';
import { EOS, GridRows, ProbTable, TrainerConfig } from './types.js';

/** Predict the next-token distribution over the engine vocabulary given the
 *  decoded prefix.  PAD and SOS mass is dropped and the row renormalized, so
 *  every exported row is a proper distribution over the engine's tokens. */
export function nextDistribution(
  model: tf.LayersModel,
  inputGrid: tf.Tensor3D,
  outputGrid: tf.Tensor3D,
  tiles: tf.Tensor2D,
  prefixIds: number[],
  vocabLength: number,
  config: TrainerConfig,
): number[] {
  const position = prefixIds.length; // prediction slot for decoder step
  const vocabSize = vocabLength + TOKEN_OFFSET;
  const stepDims = vocabSize + config.maxLen + 3;
  const tileData = tiles.dataSync();
  const decoderIn = new Float32Array(config.maxLen * stepDims);
  for (let t = 0; t < config.maxLen; t++) {
    const prev = t === 0 ? SOS_ID : t - 1 < prefixIds.length ? prefixIds[t - 1] : PAD_ID;
    decoderIn[t * stepDims + prev] = 1;
    decoderIn[t * stepDims + vocabSize + t] = 1;
    if (t < tileData.length / 3) {
      decoderIn[t * stepDims + vocabSize + config.maxLen] = tileData[t * 3];
      decoderIn[t * stepDims + vocabSize + config.maxLen + 1] = tileData[t * 3 + 1];
      decoderIn[t * stepDims + vocabSize + config.maxLen + 2] = tileData[t * 3 + 2];
    }
  }
  const row = tf.tidy(() => {
    const out = model.predict([
      inputGrid,
      outputGrid,
      tiles,
      tf.tensor3d(decoderIn, [1, config.maxLen, stepDims]),
    ]) as tf.Tensor3D;
    return out.slice([0, position, 0], [1, 1, -1]).reshape([-1]);
  });
  const raw = Array.from(row.dataSync());
  row.dispose();
  const tokenMass = raw.slice(TOKEN_OFFSET, TOKEN_OFFSET + vocabLength);
  const total = tokenMass.reduce((a, b) => a + b, 0);
  return tokenMass.map((p) => p / total);
}

/** Greedy decode reproducing the engine's loop: follow the argmax, switch to
 *  the runner-up when the argmax is EOS but another class clears tau, stop
 *  when EOS is the only class above tau or at the length cap.  Returns one
 *  probability row per decoded position. */
export function greedyRows(
  model: tf.LayersModel,
  input: GridRows,
  output: GridRows,
  vocab: string[],
  config: TrainerConfig,
  tau = 0.02,
): { rows: number[][]; decoded: string[] } {
  const eosIndex = vocab.indexOf(EOS);
  const side = config.gridSize / PATCH;
  const inputGrid = tf.tensor3d(
    encodeGrid(input, config.gridSize),
    [1, side * side, PATCH * PATCH * (NUM_COLORS + 1)],
  );
  const outputGrid = tf.tensor3d(
    encodeGrid(output, config.gridSize, alignmentChannels(output, input)),
    [1, side * side, PATCH * PATCH * (NUM_COLORS + 1 + VIEWS)],
  );
  const tiles = tf.tensor2d(tileSummary(output, input), [1, TILE_SUMMARY_DIMS]);
  const rows: number[][] = [];
  const decoded: string[] = [];
  const prefixIds: number[] = [];
  try {
    while (decoded.length < config.maxLen - 1) {
      const row = nextDistribution(model, inputGrid, outputGrid, tiles, prefixIds, vocab.length, config);
      rows.push(row);
      let best = row.indexOf(Math.max(...row));
      if (best === eosIndex) {
        const above = row.filter((p, i) => p > tau && i !== eosIndex).length;
        if (above === 0) {
          break;
        }
        let second = -1;
        for (let i = 0; i < row.length; i++) {
          if (i !== best && (second === -1 || row[i] > row[second])) {
            second = i;
          }
        }
        best = second;
      }
      decoded.push(vocab[best]);
      prefixIds.push(best + TOKEN_OFFSET);
    }
  } finally {
    inputGrid.dispose();
    outputGrid.dispose();
    tiles.dispose();
  }
  return { rows, decoded };
}

/** Plain argmax sequence (stops at EOS), for exact-match accuracy reports. */
export function argmaxSequence(
  model: tf.LayersModel,
  input: GridRows,
  output: GridRows,
  vocab: string[],
  config: TrainerConfig,
): string[] {
  const eosIndex = vocab.indexOf(EOS);
  const side = config.gridSize / PATCH;
  const inputGrid = tf.tensor3d(
    encodeGrid(input, config.gridSize),
    [1, side * side, PATCH * PATCH * (NUM_COLORS + 1)],
  );
  const outputGrid = tf.tensor3d(
    encodeGrid(output, config.gridSize, alignmentChannels(output, input)),
    [1, side * side, PATCH * PATCH * (NUM_COLORS + 1 + VIEWS)],
  );
  const tiles = tf.tensor2d(tileSummary(output, input), [1, TILE_SUMMARY_DIMS]);
  const decoded: string[] = [];
  const prefixIds: number[] = [];
  try {
    while (decoded.length < config.maxLen) {
      const row = nextDistribution(model, inputGrid, outputGrid, tiles, prefixIds, vocab.length, config);
      const best = row.indexOf(Math.max(...row));
      decoded.push(vocab[best]);
      prefixIds.push(best + TOKEN_OFFSET);
      if (best === eosIndex) {
        break;
      }
    }
  } finally {
    inputGrid.dispose();
    outputGrid.dispose();
    tiles.dispose();
  }
  return decoded;
}

export function exportTable(
  model: tf.LayersModel,
  taskId: string,
  input: GridRows,
  output: GridRows,
  vocab: string[],
  config: TrainerConfig,
  tau = 0.02,
): ProbTable {
  const { rows } = greedyRows(model, input, output, vocab, config, tau);
  return { task_id: taskId, vocab, rows };
}
