import * as fs from 'node:fs';
import * as tf from '@tensorflow/tfjs';

import { EOS, GridRows, Sample, SampleSchema, TrainerConfig } from './types.js';

export const NUM_COLORS = 10;
export const PAD_ID = 0; // never predicted; targets are EOS-padded instead
export const SOS_ID = 1;
export const TOKEN_OFFSET = 2; // vocab token i maps to id i + TOKEN_OFFSET
export const PATCH = 4; // grids are chopped into PATCH x PATCH cells
export const VIEWS = 3; // alignment channels: identity/hmirror tilings + tile boundaries

/** Per-cell agreement between the output grid and a candidate transform's
 *  periodic tiling of the input.  A tiny dense model cannot learn the
 *  long-range spatial comparisons a large convolutional encoder would, so
 *  the featurizer supplies them; the model still has to segment tiles and
 *  map agreements to sequence slots. */
export function alignmentChannels(output: GridRows, input: GridRows): Float32Array[] {
  const h = input.length;
  const w = input[0].length;
  const mirrored = input.map((row) => [...row].reverse());
  const views = [input, mirrored];
  const maps = views.map((view) => {
    const out = new Float32Array(output.length * output[0].length);
    for (let y = 0; y < output.length; y++) {
      for (let x = 0; x < output[0].length; x++) {
        out[y * output[0].length + x] = output[y][x] === view[y % h][x % w] ? 1 : 0;
      }
    }
    return out;
  });
  // tile-boundary marker, a function of the input dimensions only
  const bounds = new Float32Array(output.length * output[0].length);
  for (let y = 0; y < output.length; y++) {
    for (let x = 0; x < output[0].length; x++) {
      bounds[y * output[0].length + x] = x % w === 0 || y % h === 0 ? 1 : 0;
    }
  }
  maps.push(bounds);
  return maps;
}

export function loadDataset(path: string): Sample[] {
  const lines = fs
    .readFileSync(path, 'utf-8')
    .split('\n')
    .filter((line) => line.trim().length > 0);
  if (lines.length === 0) {
    throw new Error(`dataset ${path} is empty`);
  }
  return lines.map((line, i) => {
    const parsed = SampleSchema.safeParse(JSON.parse(line));
    if (!parsed.success) {
      throw new Error(`dataset line ${i + 1} is malformed: ${parsed.error.message}`);
    }
    return parsed.data;
  });
}

export function tokenIds(vocab: string[]): Map<string, number> {
  return new Map(vocab.map((token, i) => [token, i + TOKEN_OFFSET]));
}

/** One-hot encode a grid into a (gridSize/PATCH)^2 raster of flattened
 *  PATCH x PATCH patches; cell channel 0 marks padding outside the grid.
 *  A dense layer over the last axis is then exactly a stride-PATCH
 *  convolution, computed as one matmul (fast on the JS backend). */
export function encodeGrid(
  rows: GridRows,
  gridSize: number,
  alignment: Float32Array[] = [],
): Float32Array {
  const channels = NUM_COLORS + 1 + alignment.length;
  const side = gridSize / PATCH;
  const patchDims = PATCH * PATCH * channels;
  const out = new Float32Array(side * side * patchDims);
  for (let y = 0; y < gridSize; y++) {
    for (let x = 0; x < gridSize; x++) {
      const patch = Math.floor(y / PATCH) * side + Math.floor(x / PATCH);
      const inner = (y % PATCH) * PATCH + (x % PATCH);
      const base = patch * patchDims + inner * channels;
      if (y < rows.length && x < rows[0].length) {
        out[base + 1 + rows[y][x]] = 1;
        alignment.forEach((view, v) => {
          out[base + NUM_COLORS + 1 + v] = view[y * rows[0].length + x];
        });
      } else {
        out[base] = 1;
      }
    }
  }
  return out;
}

export const MAX_TILES = 9;
export const TILE_SUMMARY_DIMS = MAX_TILES * 3; // per tile: valid, mean E_id, mean E_mirror

/** Per-tile agreement summary in reading order.  Tiles are the
 *  (output/input)-dimension grid cells; tasks whose output is not an exact
 *  tiling of the input get an all-zero summary. */
export function tileSummary(output: GridRows, input: GridRows): Float32Array {
  const out = new Float32Array(TILE_SUMMARY_DIMS);
  const h = input.length;
  const w = input[0].length;
  const ny = Math.floor(output.length / h);
  const nx = Math.floor(output[0].length / w);
  if (ny * h !== output.length || nx * w !== output[0].length) {
    return out;
  }
  if (nx * ny === 0 || nx * ny > MAX_TILES) {
    return out;
  }
  const mirrored = input.map((row) => [...row].reverse());
  for (let r = 0; r < ny; r++) {
    for (let c = 0; c < nx; c++) {
      const idx = r * nx + c;
      let agreeId = 0;
      let agreeMir = 0;
      for (let y = 0; y < h; y++) {
        for (let x = 0; x < w; x++) {
          const cell = output[r * h + y][c * w + x];
          if (cell === input[y][x]) agreeId += 1;
          if (cell === mirrored[y][x]) agreeMir += 1;
        }
      }
      out[idx * 3] = 1;
      out[idx * 3 + 1] = agreeId / (w * h);
      out[idx * 3 + 2] = agreeMir / (w * h);
    }
  }
  return out;
}

export interface EncodedBatch {
  inputGrids: tf.Tensor3D; // [n, patches, patchDims]
  outputGrids: tf.Tensor3D;
  tileSummaries: tf.Tensor2D; // [n, TILE_SUMMARY_DIMS]
  decoderIn: tf.Tensor3D; // [n, maxLen, vocabSize + maxLen]: prev token + position
  targets: tf.Tensor3D; // [n, maxLen, vocabSize] one-hot, EOS-padded
}

export function sequenceIds(
  truth: string[],
  ids: Map<string, number>,
  maxLen: number,
): number[] {
  const eosId = ids.get(EOS)!;
  const seq = truth.map((token) => {
    const id = ids.get(token);
    if (id === undefined) {
      throw new Error(`token ${token} missing from the engine vocabulary`);
    }
    return id;
  });
  if (seq.length > maxLen) {
    throw new Error(`truth sequence longer than maxLen=${maxLen}`);
  }
  while (seq.length < maxLen) {
    seq.push(eosId); // keep emitting EOS after the program ends
  }
  return seq;
}

/** Teacher-forced tensors for one set of samples; each sample contributes its
 *  first support pair (the model conditions on a single demonstration). */
export function encodeSamples(
  samples: Sample[],
  vocab: string[],
  config: TrainerConfig,
): EncodedBatch {
  const ids = tokenIds(vocab);
  const n = samples.length;
  const inFloats = config.gridSize * config.gridSize * (NUM_COLORS + 1);
  const outFloats = config.gridSize * config.gridSize * (NUM_COLORS + 1 + VIEWS);
  const gridData = {
    input: new Float32Array(n * inFloats),
    output: new Float32Array(n * outFloats),
  };
  const summaries = new Float32Array(n * TILE_SUMMARY_DIMS);
  const vocabSize = vocab.length + TOKEN_OFFSET;
  const stepDims = vocabSize + config.maxLen + 3;
  const decoderIn = new Float32Array(n * config.maxLen * stepDims);
  const targets = new Float32Array(n * config.maxLen * vocabSize);

  samples.forEach((sample, row) => {
    const pair = sample.task.train[0];
    gridData.input.set(encodeGrid(pair.input, config.gridSize), row * inFloats);
    gridData.output.set(
      encodeGrid(pair.output, config.gridSize, alignmentChannels(pair.output, pair.input)),
      row * outFloats,
    );
    const tiles = tileSummary(pair.output, pair.input);
    summaries.set(tiles, row * TILE_SUMMARY_DIMS);
    const seq = sequenceIds(sample.truth, ids, config.maxLen);
    for (let t = 0; t < config.maxLen; t++) {
      const base = (row * config.maxLen + t) * stepDims;
      decoderIn[base + (t === 0 ? SOS_ID : seq[t - 1])] = 1;
      decoderIn[base + vocabSize + t] = 1;
      // leaf slots line up with tiles in reading order: hand slot t its tile
      if (t < MAX_TILES) {
        decoderIn[base + vocabSize + config.maxLen] = tiles[t * 3];
        decoderIn[base + vocabSize + config.maxLen + 1] = tiles[t * 3 + 1];
        decoderIn[base + vocabSize + config.maxLen + 2] = tiles[t * 3 + 2];
      }
      targets[(row * config.maxLen + t) * vocabSize + seq[t]] = 1;
    }
  });

  const side = config.gridSize / PATCH;
  const cellsPerPatch = PATCH * PATCH;
  return {
    inputGrids: tf.tensor3d(gridData.input, [n, side * side, cellsPerPatch * (NUM_COLORS + 1)]),
    outputGrids: tf.tensor3d(gridData.output, [n, side * side, cellsPerPatch * (NUM_COLORS + 1 + VIEWS)]),
    tileSummaries: tf.tensor2d(summaries, [n, TILE_SUMMARY_DIMS]),
    decoderIn: tf.tensor3d(decoderIn, [n, config.maxLen, stepDims]),
    targets: tf.tensor3d(targets, [n, config.maxLen, vocabSize]),
  };
}

/** Deterministic shuffle + split into train and held-out sets. */
export function splitSamples(
  samples: Sample[],
  holdoutFraction: number,
  seed: number,
): { train: Sample[]; holdout: Sample[] } {
  const order = [...samples.keys()];
  let state = seed >>> 0 || 1;
  const next = () => {
    // mulberry32
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
  for (let i = order.length - 1; i > 0; i--) {
    const j = Math.floor(next() * (i + 1));
    [order[i], order[j]] = [order[j], order[i]];
  }
  const cut = Math.max(1, Math.floor(samples.length * holdoutFraction));
  return {
    holdout: order.slice(0, cut).map((i) => samples[i]),
    train: order.slice(cut).map((i) => samples[i]),
  };
}
