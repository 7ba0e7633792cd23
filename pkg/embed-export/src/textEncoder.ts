/**
 * Deterministic 768-d sentence encoder for fully offline runs.
 *
 * Uses the feature-hashing trick over word unigrams and bigrams: each token
 * is FNV-1a hashed to a bucket and a sign, counts are accumulated, and the
 * vector is L2-normalized.  Identical text always yields the identical
 * vector, and any text with at least one token yields a non-zero one.
 *
 * A pretrained transformer encoder can be slotted in behind the same
 * interface when its weights are available; the encoder name is recorded in
 * the export sidecar either way.
 */

import { TEXT_DIM } from "./types";

export const TEXT_ENCODER_NAME = "hash768@v1";

function fnv1a(text: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    h ^= text.charCodeAt(i);
    h = Math.imul(h, 0x01000193) >>> 0;
  }
  return h >>> 0;
}

function tokenize(text: string): string[] {
  return text
    .toLowerCase()
    .split(/[^a-z0-9]+/)
    .filter((t) => t.length > 0);
}

export function encodeText(text: string): Float64Array {
  const tokens = tokenize(text);
  if (tokens.length === 0) {
    throw new Error(`cannot encode text with no tokens: ${JSON.stringify(text)}`);
  }
  const out = new Float64Array(TEXT_DIM);
  const add = (feature: string, weight: number) => {
    const h = fnv1a(feature);
    const bucket = h % TEXT_DIM;
    const sign = (h >>> 16) & 1 ? 1.0 : -1.0;
    out[bucket] += sign * weight;
  };
  for (const tok of tokens) {
    add(`u:${tok}`, 1.0);
  }
  for (let i = 0; i + 1 < tokens.length; i++) {
    add(`b:${tokens[i]}_${tokens[i + 1]}`, 0.5);
  }
  let norm = 0.0;
  for (let i = 0; i < TEXT_DIM; i++) norm += out[i] * out[i];
  norm = Math.sqrt(norm);
  if (norm === 0.0) {
    // signed buckets cancelled exactly; fall back to an unsigned count so
    // the key invariant (non-zero) still holds
    for (const tok of tokens) {
      out[fnv1a(`u:${tok}`) % TEXT_DIM] += 1.0;
    }
    norm = Math.sqrt(out.reduce((acc, v) => acc + v * v, 0));
  }
  for (let i = 0; i < TEXT_DIM; i++) out[i] /= norm;
  return out;
}
