// Deterministic lexical text embedder.
//
// Feature hashing over words: lowercase, split on anything that is not
// a letter or digit, weight each distinct word by a damped term
// frequency (common function words get a fraction of the weight), and
// scatter the weights into a fixed-width vector via a stable hash with
// a hashed sign. Texts beyond the token limit are embedded per chunk
// and the L2-normalized chunk vectors averaged, the same chunking rule
// the pipeline's built-in encoder documents.
//
// Identical input always produces the identical vector: no state, no
// randomness, no external weights.

export const DEFAULT_DIM = 384;
export const MAX_TOKENS = 256;

const STOPWORD_WEIGHT = 0.2;

const STOPWORDS = new Set(
  (
    "the a an and or but if then of to in on for with at by from as is are was " +
    "were be been being it its this that these those we you they i he she will " +
    "would can could should our your their what how why when where which not " +
    "no yes do does did have has had so just about more most very"
  ).split(" ")
);

export function tokenize(text: string): string[] {
  return text
    .toLowerCase()
    .split(/[^\p{L}\p{N}]+/u)
    .filter((t) => t.length > 0);
}

// 32-bit FNV-1a over the UTF-8 bytes of a string.
function fnv1a(text: string, seed: number): number {
  let hash = seed >>> 0;
  const bytes = Buffer.from(text, "utf-8");
  for (const byte of bytes) {
    hash ^= byte;
    hash = Math.imul(hash, 0x01000193) >>> 0;
  }
  return hash >>> 0;
}

function embedChunk(tokens: string[], dim: number): Float64Array {
  const counts = new Map<string, number>();
  for (const token of tokens) {
    counts.set(token, (counts.get(token) ?? 0) + 1);
  }
  const vec = new Float64Array(dim);
  for (const [token, count] of counts) {
    const base = STOPWORDS.has(token) ? STOPWORD_WEIGHT : 1.0;
    const weight = base * (1.0 + Math.log(count));
    const index = fnv1a(token, 0x811c9dc5) % dim;
    const sign = (fnv1a(token, 0x9747b28c) & 1) === 1 ? 1.0 : -1.0;
    vec[index] += sign * weight;
  }
  let norm = 0.0;
  for (const v of vec) norm += v * v;
  norm = Math.sqrt(norm);
  if (norm > 0) {
    for (let i = 0; i < dim; i++) vec[i] /= norm;
  }
  return vec;
}

/** Embed one text span into a fixed-width vector (zero vector when the
 * text has no tokens, so the caller's zero-norm guard can skip it). */
export function embed(text: string, dim: number = DEFAULT_DIM): number[] {
  const tokens = tokenize(text);
  const out = new Float64Array(dim);
  if (tokens.length === 0) {
    return Array.from(out);
  }
  const chunks: string[][] = [];
  for (let start = 0; start < tokens.length; start += MAX_TOKENS) {
    chunks.push(tokens.slice(start, start + MAX_TOKENS));
  }
  for (const chunk of chunks) {
    const vec = embedChunk(chunk, dim);
    for (let i = 0; i < dim; i++) out[i] += vec[i] / chunks.length;
  }
  return Array.from(out);
}
