/** Sentence encoders: the pretrained 768-d sentence-transformer path and the
 * dependency-free deterministic test encoder. */

import { ActivityClass, Lexicon, buildSentence } from "./lexicon.js";
import { SplitMix64, fnv1a64 } from "./rng.js";

export const EMBEDDING_DIM = 768;

export interface Encoder {
  name: string;
  /** Embed one class; sentence is the templated description. */
  encode(cls: ActivityClass, sentence: string, lexicon: Lexicon): Promise<Float64Array>;
}

function l2normalize(v: Float64Array): Float64Array {
  let sum = 0;
  for (const x of v) sum += x * x;
  const norm = Math.sqrt(sum);
  if (norm === 0) throw new Error("zero-norm embedding");
  const out = new Float64Array(v.length);
  for (let i = 0; i < v.length; i++) out[i] = v[i] / norm;
  return out;
}

export function motionDirection(motionId: string, dim = EMBEDDING_DIM): Float64Array {
  const rng = new SplitMix64(fnv1a64(motionId));
  return l2normalize(rng.normals(dim));
}

/** Positionally weighted (1/(1+j)) sum of unit motion directions, normalized. */
export function testEmbed(motionIds: string[], dim = EMBEDDING_DIM): Float64Array {
  if (!motionIds.length) throw new Error("testEmbed requires at least one motion");
  const acc = new Float64Array(dim);
  motionIds.forEach((mid, j) => {
    const dir = motionDirection(mid, dim);
    for (let i = 0; i < dim; i++) acc[i] += dir[i] / (1 + j);
  });
  return l2normalize(acc);
}

export function testEncoder(): Encoder {
  return {
    name: "test-embedder-v1",
    async encode(cls) {
      return testEmbed(cls.motions);
    },
  };
}

/**
 * Pretrained sentence-transformer encoder (gtr-t5-base by default).
 * Requires `npm i @xenova/transformers` and model weights; aborts with a
 * clear message when either is unavailable instead of falling back.
 */
export async function transformerEncoder(modelId: string): Promise<Encoder> {
  let pipeline: any;
  try {
    ({ pipeline } = await import("@xenova/transformers" as string));
  } catch (err) {
    throw new Error(
      `encoder load failure: @xenova/transformers is not installed (${err}); ` +
        `run 'npm i @xenova/transformers' or use --encoder test`
    );
  }
  let extractor: any;
  try {
    extractor = await pipeline("feature-extraction", modelId, { quantized: false });
  } catch (err) {
    throw new Error(`encoder load failure: cannot load model ${modelId}: ${err}`);
  }
  return {
    name: modelId,
    async encode(_cls, sentence) {
      const output = await extractor(sentence, { pooling: "mean", normalize: false });
      const vector = Float64Array.from(output.data as Iterable<number>);
      if (vector.length !== EMBEDDING_DIM) {
        throw new Error(
          `encoder emitted ${vector.length} dimensions, expected ${EMBEDDING_DIM}`
        );
      }
      return vector;
    },
  };
}
