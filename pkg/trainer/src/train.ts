import * as fs from 'node:fs';
import * as path from 'node:path';
import * as tf from '@tensorflow/tfjs';

import { ensureBackend } from './backend.js';
import { encodeSamples, loadDataset, splitSamples } from './data.js';
import { argmaxSequence, exportTable } from './decode.js';
import { buildModel } from './model.js';
import { DEFAULT_CONFIG, EOS, Sample, TrainerConfig, engineVocab } from './types.js';

export interface TrainResult {
  model: tf.LayersModel;
  lossHistory: number[];
  holdout: Sample[];
  vocab: string[];
  config: TrainerConfig;
}

export async function train(
  datasetPath: string,
  vocabDumpPath: string,
  overrides: Partial<TrainerConfig> = {},
): Promise<TrainResult> {
  const backend = await ensureBackend();
  console.log(`tfjs backend: ${backend}`);
  const config: TrainerConfig = { ...DEFAULT_CONFIG, ...overrides };
  const vocab = engineVocab(JSON.parse(fs.readFileSync(vocabDumpPath, 'utf-8')));
  const samples = loadDataset(datasetPath);
  const { train: trainSamples, holdout } = splitSamples(samples, config.holdoutFraction, config.seed);
  if (trainSamples.length === 0) {
    throw new Error('dataset too small to split');
  }

  const model = buildModel(vocab.length, config);
  const batch = encodeSamples(trainSamples, vocab, config);
  const lossHistory: number[] = [];
  try {
    const history = await model.fit(
      [batch.inputGrids, batch.outputGrids, batch.tileSummaries, batch.decoderIn],
      batch.targets,
      {
        epochs: config.epochs,
        batchSize: config.batchSize,
        shuffle: false, // data pre-shuffled with the seeded split
        verbose: 0,
      },
    );
    for (const value of history.history.loss as number[]) {
      lossHistory.push(Number(value));
    }
  } finally {
    batch.inputGrids.dispose();
    batch.outputGrids.dispose();
    batch.tileSummaries.dispose();
    batch.decoderIn.dispose();
    batch.targets.dispose();
  }
  return { model, lossHistory, holdout, vocab, config };
}

export function exactSequenceAccuracy(result: TrainResult, samples: Sample[]): number {
  let hits = 0;
  for (const sample of samples) {
    const pair = sample.task.train[0];
    const decoded = argmaxSequence(result.model, pair.input, pair.output, result.vocab, result.config);
    const truth = [...sample.truth];
    if (truth[truth.length - 1] !== EOS) {
      truth.push(EOS);
    }
    if (decoded.length === truth.length && decoded.every((t, i) => t === truth[i])) {
      hits += 1;
    }
  }
  return samples.length ? hits / samples.length : 0;
}

export function exportTables(
  result: TrainResult,
  samples: Sample[],
  outDir: string,
  tau = 0.02,
): string[] {
  fs.mkdirSync(outDir, { recursive: true });
  const written: string[] = [];
  samples.forEach((sample, i) => {
    const pair = sample.task.train[0];
    const taskId = `${sample.generator}-${sample.seed}`;
    const table = exportTable(
      result.model, taskId, pair.input, pair.output, result.vocab, result.config, tau,
    );
    const file = path.join(outDir, `${taskId}.json`);
    fs.writeFileSync(file, JSON.stringify(table));
    written.push(file);
    if ((i + 1) % 10 === 0) {
      console.log(`exported ${i + 1}/${samples.length} tables`);
    }
  });
  return written;
}

function parseArgs(argv: string[]): Record<string, string> {
  const out: Record<string, string> = {};
  for (let i = 0; i < argv.length; i += 2) {
    if (!argv[i].startsWith('--') || argv[i + 1] === undefined) {
      throw new Error(`bad argument pair near ${argv[i]}`);
    }
    out[argv[i].slice(2)] = argv[i + 1];
  }
  return out;
}

export async function main(argv: string[]): Promise<void> {
  const args = parseArgs(argv);
  for (const required of ['dataset', 'vocab', 'out-dir']) {
    if (!(required in args)) {
      throw new Error(`--${required} is required`);
    }
  }
  const result = await train(args.dataset, args.vocab, {
    epochs: args.epochs ? Number(args.epochs) : undefined,
    seed: args.seed ? Number(args.seed) : undefined,
    batchSize: args['batch-size'] ? Number(args['batch-size']) : undefined,
  } as Partial<TrainerConfig>);
  console.log(`final loss: ${result.lossHistory[result.lossHistory.length - 1].toFixed(4)}`);
  const accuracy = exactSequenceAccuracy(result, result.holdout);
  console.log(`held-out exact-sequence accuracy: ${(accuracy * 100).toFixed(1)}% (${result.holdout.length} tasks)`);
  const files = exportTables(result, result.holdout, args['out-dir']);
  console.log(`wrote ${files.length} probability tables to ${args['out-dir']}`);
}

const isDirectRun = process.argv[1] && import.meta.url.endsWith(path.basename(process.argv[1]));
if (isDirectRun) {
  main(process.argv.slice(2)).catch((err) => {
    console.error(err);
    process.exit(1);
  });
}
