/** Minimal binary PPM (P6) / PGM (P5) decoder; frames and button images arrive in this format. */

import { readFileSync } from 'node:fs';

export class MediaError extends Error {}

export interface GrayImage {
  width: number;
  height: number;
  /** Row-major luminance in [0, 1]. */
  pixels: Float64Array;
}

export function decodeImage(path: string): GrayImage {
  let raw: Buffer;
  try {
    raw = readFileSync(path);
  } catch (err) {
    throw new MediaError(`cannot read image ${path}: ${(err as Error).message}`);
  }
  const magic = raw.subarray(0, 2).toString('ascii');
  if (magic !== 'P6' && magic !== 'P5') {
    throw new MediaError(`${path}: unsupported format ${magic}; expected binary PPM/PGM`);
  }

  // header: magic, width, height, maxval separated by whitespace/comments
  let off = 2;
  const fields: number[] = [];
  while (fields.length < 3) {
    while (off < raw.length && /\s/.test(String.fromCharCode(raw[off]))) off++;
    if (off < raw.length && raw[off] === 0x23) {
      while (off < raw.length && raw[off] !== 0x0a) off++;
      continue;
    }
    let start = off;
    while (off < raw.length && !/\s/.test(String.fromCharCode(raw[off]))) off++;
    if (start === off) throw new MediaError(`${path}: malformed header`);
    fields.push(parseInt(raw.subarray(start, off).toString('ascii'), 10));
  }
  off++; // single whitespace after maxval
  const [width, height, maxval] = fields;
  if (!(width > 0 && height > 0 && maxval > 0 && maxval < 65536)) {
    throw new MediaError(`${path}: bad dimensions ${width}x${height} maxval ${maxval}`);
  }
  const channels = magic === 'P6' ? 3 : 1;
  const expect = width * height * channels;
  if (raw.length - off < expect) throw new MediaError(`${path}: truncated pixel data`);

  const pixels = new Float64Array(width * height);
  for (let i = 0; i < width * height; i++) {
    if (channels === 3) {
      const r = raw[off + 3 * i];
      const g = raw[off + 3 * i + 1];
      const b = raw[off + 3 * i + 2];
      pixels[i] = (0.299 * r + 0.587 * g + 0.114 * b) / maxval;
    } else {
      pixels[i] = raw[off + i] / maxval;
    }
  }
  return { width, height, pixels };
}

/** Average-pool to a fixed grid; the encoders consume this as their raw patch input. */
export function toGrid(image: GrayImage, size: number): Float64Array {
  const grid = new Float64Array(size * size);
  for (let gy = 0; gy < size; gy++) {
    for (let gx = 0; gx < size; gx++) {
      const x0 = Math.floor((gx * image.width) / size);
      const x1 = Math.max(x0 + 1, Math.floor(((gx + 1) * image.width) / size));
      const y0 = Math.floor((gy * image.height) / size);
      const y1 = Math.max(y0 + 1, Math.floor(((gy + 1) * image.height) / size));
      let acc = 0;
      for (let y = y0; y < y1; y++) {
        for (let x = x0; x < x1; x++) acc += image.pixels[y * image.width + x];
      }
      grid[gy * size + gx] = acc / ((x1 - x0) * (y1 - y0));
    }
  }
  return grid;
}
