/**
 * Aligned text/visual encoder families.
 *
 * Each family couples one text encoder with one visual encoder in a
 * shared feature space; an export must stay inside a single family
 * (mixing families is refused).  The built-in backends are
 * deterministic hash-projection encoders: checkpoint-free stand-ins
 * with the same interface real pretrained backends would implement.
 * Only the egovlp-like family is video-capable; its clip encoding
 * consumes all frames, and button images are padded along the temporal
 * dimension before passing through the video path.
 */

import { GrayImage, toGrid } from './ppm.js';

export class AdapterError extends Error {}

export type EncoderFamily = 'clip-like' | 'blip-like' | 'egovlp-like';

export const FAMILIES: EncoderFamily[] = ['clip-like', 'blip-like', 'egovlp-like'];

const VIDEO_CAPABLE: Record<EncoderFamily, boolean> = {
  'clip-like': false,
  'blip-like': false,
  'egovlp-like': true,
};

export function isVideoCapable(family: EncoderFamily): boolean {
  return VIDEO_CAPABLE[family];
}

const GRID = 8;
const BUTTON_TEMPORAL_PAD = 4;

function fnv1a(text: string): number {
  let hash = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    hash ^= text.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193) >>> 0;
  }
  return hash >>> 0;
}

/** mulberry32: tiny deterministic PRNG for projection matrices. */
function rngFrom(seedText: string): () => number {
  let a = fnv1a(seedText) || 1;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function normalize(vec: Float32Array): Float32Array {
  let norm = 0;
  for (const v of vec) norm += v * v;
  norm = Math.sqrt(norm);
  if (norm > 0) for (let i = 0; i < vec.length; i++) vec[i] /= norm;
  return vec;
}

export class TextEncoder {
  constructor(readonly family: EncoderFamily, readonly dim: number) {}

  encode(tokens: string[]): Float32Array {
    if (tokens.length === 0) throw new AdapterError('text encoder: empty input');
    const out = new Float32Array(this.dim);
    for (const token of tokens) {
      const h = fnv1a(`${this.family}/text/${token}`);
      const bucket = h % this.dim;
      const sign = (h >>> 16) & 1 ? 1 : -1;
      out[bucket] += sign;
    }
    return normalize(out);
  }
}

export class VisualEncoder {
  private projection: Float64Array; // [dim x GRID^2], seeded by family

  constructor(readonly family: EncoderFamily, readonly dim: number) {
    const rng = rngFrom(`${family}/visual/projection`);
    this.projection = new Float64Array(dim * GRID * GRID);
    for (let i = 0; i < this.projection.length; i++) {
      this.projection[i] = rng() < 0.5 ? -1 : 1;
    }
  }

  encodeImage(image: GrayImage): Float32Array {
    const grid = toGrid(image, GRID);
    const mean = grid.reduce((a, b) => a + b, 0) / grid.length;
    const out = new Float32Array(this.dim);
    for (let i = 0; i < this.dim; i++) {
      let acc = 0;
      for (let j = 0; j < grid.length; j++) {
        acc += this.projection[i * grid.length + j] * (grid[j] - mean);
      }
      out[i] = acc;
    }
    return normalize(out);
  }

  /** Video path: per-frame features averaged and re-normalized. */
  encodeClip(frames: GrayImage[]): Float32Array {
    if (!isVideoCapable(this.family)) {
      throw new AdapterError(`${this.family} is not video-capable`);
    }
    if (frames.length === 0) throw new AdapterError('visual encoder: empty clip');
    const out = new Float32Array(this.dim);
    for (const frame of frames) {
      const emb = this.encodeImage(frame);
      for (let i = 0; i < this.dim; i++) out[i] += emb[i] / frames.length;
    }
    return normalize(out);
  }

  /** Buttons under a video model: replicate the image along time, then encode as a clip. */
  encodeButton(image: GrayImage, videoMode: boolean): Float32Array {
    if (!videoMode) return this.encodeImage(image);
    return this.encodeClip(Array(BUTTON_TEMPORAL_PAD).fill(image));
  }
}

export interface EncoderPair {
  text: TextEncoder;
  visual: VisualEncoder;
}

export function buildEncoders(
  family: EncoderFamily,
  dT: number,
  dV: number,
  textFamily?: EncoderFamily,
  visualFamily?: EncoderFamily,
): EncoderPair {
  const tf = textFamily ?? family;
  const vf = visualFamily ?? family;
  if (tf !== vf) {
    throw new AdapterError(
      `misaligned encoders: text ${tf} vs visual ${vf}; exports must use one aligned family`,
    );
  }
  return { text: new TextEncoder(tf, dT), visual: new VisualEncoder(vf, dV) };
}
