import { mkdtempSync, readFileSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';

import { describe, expect, it } from 'vitest';

import { DenseArray, FeatpackError, encodeFeatpack, readFeatpack, writeFeatpack } from '../src/featpack.js';

function f32(shape: number[], values: number[]): DenseArray {
  return { dtype: 'f32', shape, data: Float32Array.from(values) };
}

describe('featpack', () => {
  it('round-trips f32 and i8 entries bit-exactly', () => {
    const dir = mkdtempSync(join(tmpdir(), 'fp-'));
    const entries = new Map<string, DenseArray>([
      ['E_l/f0', f32([2, 3], [1, -2, 3.5, 0, 0.25, -1e-8])],
      ['S/f0', { dtype: 'i8', shape: [4], data: Int8Array.from([-1, 0, 1, 1]) }],
    ]);
    const path = join(dir, 't.featpack');
    writeFeatpack(entries, path);
    const back = readFeatpack(path);
    expect([...back.keys()]).toEqual([...entries.keys()]);
    expect(back.get('E_l/f0')).toEqual(entries.get('E_l/f0'));
    expect(back.get('S/f0')).toEqual(entries.get('S/f0'));
  });

  it('produces the documented bytes for a one-entry file', () => {
    const buf = encodeFeatpack(new Map([['a', f32([2], [1, 2])]]));
    expect(buf.length).toBe(33);
    expect(buf.subarray(0, 8).toString('ascii')).toBe('AQTCFT01');
    expect(buf.readUInt32LE(8)).toBe(1);
    expect(buf.readUInt16LE(12)).toBe(1);
    expect(buf.subarray(14, 15).toString()).toBe('a');
    expect(buf.readUInt8(15)).toBe(1); // dtype f32
    expect(buf.readUInt8(16)).toBe(1); // ndim
    expect(buf.readUInt32LE(17)).toBe(2);
    expect(buf.readFloatLE(21)).toBe(1);
    expect(buf.readFloatLE(25)).toBe(2);
  });

  it('is deterministic for identical inputs', () => {
    const make = () =>
      encodeFeatpack(
        new Map<string, DenseArray>([
          ['x', f32([3], [0.1, 0.2, 0.3])],
          ['y', { dtype: 'i8', shape: [2], data: Int8Array.from([1, -1]) }],
        ]),
      );
    expect(make().equals(make())).toBe(true);
  });

  it('detects corruption via the trailing CRC', () => {
    const dir = mkdtempSync(join(tmpdir(), 'fp-'));
    const path = join(dir, 'c.featpack');
    writeFeatpack(new Map([['a', f32([2], [1, 2])]]), path);
    const raw = Buffer.from(readFileSync(path));
    raw[20] ^= 0xff;
    const bad = join(dir, 'bad.featpack');
    writeFileSync(bad, raw);
    expect(() => readFeatpack(bad)).toThrow(FeatpackError);
  });

  it('rejects invalid entries', () => {
    expect(() => encodeFeatpack(new Map([['', f32([1], [1])]]))).toThrow(FeatpackError);
    expect(() => encodeFeatpack(new Map([['a', f32([2], [1])]]))).toThrow(FeatpackError);
    expect(() =>
      encodeFeatpack(new Map([['a', { dtype: 'f32', shape: [], data: new Float32Array(1) }]])),
    ).toThrow(FeatpackError);
  });
});
