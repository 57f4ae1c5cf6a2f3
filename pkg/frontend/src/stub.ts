/**
 * Encoder adapters. Only the stub ships here: it hashes an input string and
 * expands the hash through the counter-based generator, so fixtures stay
 * bit-reproducible on any platform without model weights. Real encoders plug
 * in through the same registry.
 */

import { fnv1a64, uniform01 } from "./rng.js";

export interface EncoderSpec {
  /** Registry name; also written into each record's encoder field. */
  name: string;
  dimension: number;
  /** Unit-normalize adapter output before storage (cosine-space encoders). */
  normalize: boolean;
}

export interface EncoderAdapter {
  /** Embed one image. The stub keys off the record id, never pixel data. */
  embedImage(path: string, id: string, spec: EncoderSpec): Float64Array;
  /** Embed one prompt string; absent for image-only encoders. */
  embedText?(text: string, spec: EncoderSpec): Float64Array;
}

/** Hash expansion shared by the stub's image and text paths. */
function stubExpand(keyText: string, dimension: number): Float64Array {
  const uniforms = uniform01(fnv1a64(keyText), 0, dimension);
  const out = new Float64Array(dimension);
  for (let i = 0; i < dimension; i++) {
    out[i] = 2.0 * uniforms[i]! - 1.0;
  }
  return out;
}

const stub: EncoderAdapter = {
  embedImage: (_path, id, spec) => stubExpand(id, spec.dimension),
  embedText: (text, spec) => stubExpand(text, spec.dimension),
};

const registry = new Map<string, EncoderAdapter>([["stub", stub]]);

/** Look up an adapter; model-backed encoders must be registered by callers. */
export function getEncoder(name: string): EncoderAdapter {
  const adapter = registry.get(name);
  if (!adapter) {
    const known = [...registry.keys()].sort().join(", ");
    throw new Error(`unknown encoder '${name}' (registered: ${known})`);
  }
  return adapter;
}

export function registerEncoder(name: string, adapter: EncoderAdapter): void {
  registry.set(name, adapter);
}

export function defaultSpec(name: string, dimension: number): EncoderSpec {
  return { name, dimension, normalize: true };
}

/**
 * Validate dimension, optionally unit-normalize, and round to float32.
 *
 * The norm uses plain sequential accumulation (not a pairwise or compensated
 * sum) so independent implementations reproduce identical float64 and, after
 * rounding, identical float32 bits.
 */
export function finalizeVector(raw: Float64Array, spec: EncoderSpec, label: string): Float32Array {
  if (raw.length !== spec.dimension) {
    throw new Error(
      `${label}: encoder '${spec.name}' returned ${raw.length} dimensions, spec says ${spec.dimension}`,
    );
  }
  let values = raw;
  if (spec.normalize) {
    let sum = 0.0;
    for (const x of raw) {
      sum += x * x;
    }
    if (sum === 0.0) {
      throw new Error(`${label}: zero-norm embedding`);
    }
    const norm = Math.sqrt(sum);
    values = raw.map((x) => x / norm);
  }
  const out = new Float32Array(spec.dimension);
  for (let i = 0; i < spec.dimension; i++) {
    out[i] = Math.fround(values[i]!);
  }
  return out;
}
