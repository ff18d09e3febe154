/**
 * FEATPACK writer/reader, byte-compatible with the engine.
 *
 * Layout (little-endian): magic "AQTCFT01", entry_count u32, then per
 * entry key_len u16 + key + dtype u8 (1=f32, 2=i8) + ndim u8 + dims
 * (ndim x u32) + row-major payload; trailing crc32 u32 over every byte
 * after the magic.
 */

import { crc32 } from 'node:zlib';
import { readFileSync, renameSync, writeFileSync } from 'node:fs';

export const MAGIC = Buffer.from('AQTCFT01', 'ascii');

export type DenseArray =
  | { dtype: 'f32'; shape: number[]; data: Float32Array }
  | { dtype: 'i8'; shape: number[]; data: Int8Array };

export class FeatpackError extends Error {}

function elementCount(shape: number[]): number {
  return shape.reduce((a, b) => a * b, 1);
}

function validateEntry(key: string, arr: DenseArray): void {
  if (!key) throw new FeatpackError('featpack key must be non-empty');
  if (Buffer.byteLength(key, 'utf-8') > 65535) throw new FeatpackError('featpack key too long');
  if (arr.shape.length < 1 || arr.shape.length > 4) {
    throw new FeatpackError(`entry ${key}: ndim must be 1..4, got ${arr.shape.length}`);
  }
  if (elementCount(arr.shape) !== arr.data.length) {
    throw new FeatpackError(`entry ${key}: shape ${arr.shape} does not match ${arr.data.length} values`);
  }
}

export function encodeFeatpack(entries: Map<string, DenseArray>): Buffer {
  const chunks: Buffer[] = [];
  const count = Buffer.alloc(4);
  count.writeUInt32LE(entries.size);
  chunks.push(count);
  for (const [key, arr] of entries) {
    validateEntry(key, arr);
    const keyBytes = Buffer.from(key, 'utf-8');
    const header = Buffer.alloc(2 + keyBytes.length + 2 + 4 * arr.shape.length);
    let off = header.writeUInt16LE(keyBytes.length, 0);
    off += keyBytes.copy(header, off);
    off = header.writeUInt8(arr.dtype === 'f32' ? 1 : 2, off);
    off = header.writeUInt8(arr.shape.length, off);
    for (const dim of arr.shape) off = header.writeUInt32LE(dim, off);
    chunks.push(header);

    const payload = Buffer.alloc(arr.data.length * (arr.dtype === 'f32' ? 4 : 1));
    const view = new DataView(payload.buffer, payload.byteOffset);
    if (arr.dtype === 'f32') {
      arr.data.forEach((v, i) => view.setFloat32(4 * i, v, true));
    } else {
      arr.data.forEach((v, i) => view.setInt8(i, v));
    }
    chunks.push(payload);
  }
  const body = Buffer.concat(chunks);
  const tail = Buffer.alloc(4);
  tail.writeUInt32LE(crc32(body) >>> 0);
  return Buffer.concat([MAGIC, body, tail]);
}

/** Atomic write: temp file in place, then rename. */
export function writeFeatpack(entries: Map<string, DenseArray>, path: string): void {
  const tmp = `${path}.tmp`;
  writeFileSync(tmp, encodeFeatpack(entries));
  renameSync(tmp, path);
}

export function readFeatpack(path: string): Map<string, DenseArray> {
  const raw = readFileSync(path);
  if (raw.length < 16) throw new FeatpackError(`${path}: truncated featpack`);
  if (!raw.subarray(0, 8).equals(MAGIC)) throw new FeatpackError(`${path}: bad magic`);
  const body = raw.subarray(8, raw.length - 4);
  const stored = raw.readUInt32LE(raw.length - 4);
  if ((crc32(body) >>> 0) !== stored) throw new FeatpackError(`${path}: CRC32 mismatch`);

  const entries = new Map<string, DenseArray>();
  let off = 0;
  const need = (n: number) => {
    if (off + n > body.length) throw new FeatpackError(`${path}: truncated body`);
  };
  need(4);
  const count = body.readUInt32LE(off);
  off += 4;
  for (let i = 0; i < count; i++) {
    need(2);
    const keyLen = body.readUInt16LE(off);
    off += 2;
    need(keyLen + 2);
    const key = body.subarray(off, off + keyLen).toString('utf-8');
    off += keyLen;
    const dtypeCode = body.readUInt8(off);
    const ndim = body.readUInt8(off + 1);
    off += 2;
    need(4 * ndim);
    const shape: number[] = [];
    for (let d = 0; d < ndim; d++) {
      shape.push(body.readUInt32LE(off));
      off += 4;
    }
    const n = elementCount(shape);
    if (dtypeCode === 1) {
      need(4 * n);
      const view = new DataView(body.buffer, body.byteOffset + off, 4 * n);
      const data = new Float32Array(n);
      for (let k = 0; k < n; k++) data[k] = view.getFloat32(4 * k, true);
      entries.set(key, { dtype: 'f32', shape, data });
      off += 4 * n;
    } else if (dtypeCode === 2) {
      need(n);
      const data = new Int8Array(body.subarray(off, off + n));
      entries.set(key, { dtype: 'i8', shape, data });
      off += n;
    } else {
      throw new FeatpackError(`${path}: unknown dtype code ${dtypeCode}`);
    }
  }
  if (off !== body.length) throw new FeatpackError(`${path}: trailing bytes`);
  return entries;
}
