import { z } from 'zod';

export const GridSchema = z.array(z.array(z.number().int().min(0).max(9)).min(1)).min(1);

export const PairSchema = z.object({
  input: GridSchema,
  output: GridSchema,
});

export const SampleSchema = z.object({
  task: z.object({
    train: z.array(PairSchema).min(1),
    test: z.array(PairSchema),
  }),
  truth: z.array(z.string()).min(1),
  generator: z.string(),
  seed: z.number().int(),
  dsl_version: z.number().int().min(1).max(3),
});
export type Sample = z.infer<typeof SampleSchema>;
export type GridRows = z.infer<typeof GridSchema>;

// One entry of `gridsynth dsl dump --version N`.
export const DumpEntrySchema = z.object({
  name: z.string(),
  params: z.array(z.string()),
  returns: z.string(),
  version: z.number().int(),
});
export const DumpSchema = z.array(DumpEntrySchema);

// The engine's probability-table interchange format.
export interface ProbTable {
  task_id: string;
  vocab: string[];
  rows: number[][];
}

export const SPECIALS = ['<NewLevel>', '<Identity>', '<EOS>'] as const;
export const EOS = '<EOS>';

/** Token classes the model scores: registry order, then the special tokens.
 *  Must match the engine's vocabulary exactly or the tables are rejected. */
export function engineVocab(dump: unknown): string[] {
  const entries = DumpSchema.parse(dump);
  return [...entries.map((e) => e.name), ...SPECIALS];
}

export interface TrainerConfig {
  epochs: number;
  batchSize: number;
  embeddingSize: number;
  seed: number;
  maxLen: number;
  gridSize: number;
  holdoutFraction: number;
}

export const DEFAULT_CONFIG: TrainerConfig = {
  epochs: 20,
  batchSize: 32,
  embeddingSize: 64,
  seed: 0,
  maxLen: 28,
  gridSize: 32,
  holdoutFraction: 0.1,
};
