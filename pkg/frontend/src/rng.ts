/**
 * Deterministic counter-based random words, bit-compatible with the Python
 * evaluation engine's generator.
 *
 * word(key, i) = mix64(key + (i + 1) * GAMMA) with the SplitMix64 finalizer,
 * done in BigInt so every platform computes identical 64-bit values. Uniforms
 * take the top 53 bits of a word, which converts to a float64 exactly.
 */

const MASK = 0xffffffffffffffffn;

const FNV_OFFSET = 0xcbf29ce484222325n;
const FNV_PRIME = 0x100000001b3n;

const GAMMA = 0x9e3779b97f4a7c15n;
const MIX_A = 0xbf58476d1ce4e5b9n;
const MIX_B = 0x94d049bb133111ebn;

/** 64-bit FNV-1a hash of a string's UTF-8 bytes. */
export function fnv1a64(text: string): bigint {
  let h = FNV_OFFSET;
  for (const byte of new TextEncoder().encode(text)) {
    h = ((h ^ BigInt(byte)) * FNV_PRIME) & MASK;
  }
  return h;
}

/** Word `index` of the stream addressed by `key`. */
export function word(key: bigint, index: number): bigint {
  let z = ((key & MASK) + BigInt(index + 1) * GAMMA) & MASK;
  z = ((z ^ (z >> 30n)) * MIX_A) & MASK;
  z = ((z ^ (z >> 27n)) * MIX_B) & MASK;
  return z ^ (z >> 31n);
}

/** float64 uniforms in [0, 1), one per stream word starting at `start`. */
export function uniform01(key: bigint, start: number, count: number): Float64Array {
  const out = new Float64Array(count);
  for (let i = 0; i < count; i++) {
    out[i] = Number(word(key, start + i) >> 11n) * 2 ** -53;
  }
  return out;
}
