#!/usr/bin/env node
/**
 * aqtc-export: turn a raw AssistQ-style directory into manifest + FEATPACK.
 *
 *   aqtc-export export --raw <dir> --encoder egovlp-like --variant global \
 *       --out <dir> [--d-t 32] [--d-v 32] [--text-encoder F] [--visual-encoder F]
 */

import { parseArgs } from 'node:util';

import { AdapterError, EncoderFamily, FAMILIES } from './encoders.js';
import { exportDataset } from './export.js';
import { MediaError } from './ppm.js';

function family(value: string, flag: string): EncoderFamily {
  if (!FAMILIES.includes(value as EncoderFamily)) {
    throw new AdapterError(`${flag}: unknown encoder family ${value}; pick one of ${FAMILIES.join(', ')}`);
  }
  return value as EncoderFamily;
}

export function main(argv: string[]): number {
  try {
    const [command, ...rest] = argv;
    if (command !== 'export') {
      console.error('usage: aqtc-export export --raw <dir> --encoder <family> --variant local|global --out <dir>');
      return 1;
    }
    const { values } = parseArgs({
      args: rest,
      options: {
        raw: { type: 'string' },
        encoder: { type: 'string' },
        variant: { type: 'string', default: 'local' },
        out: { type: 'string' },
        'd-t': { type: 'string', default: '32' },
        'd-v': { type: 'string', default: '32' },
        'text-encoder': { type: 'string' },
        'visual-encoder': { type: 'string' },
      },
    });
    if (!values.raw || !values.encoder || !values.out) {
      console.error('missing required flags: --raw, --encoder, --out');
      return 1;
    }
    if (values.variant !== 'local' && values.variant !== 'global') {
      console.error(`--variant must be local or global, got ${values.variant}`);
      return 1;
    }
    const manifest = exportDataset({
      rawDir: values.raw,
      outDir: values.out,
      family: family(values.encoder, '--encoder'),
      variant: values.variant,
      dT: parseInt(values['d-t']!, 10),
      dV: parseInt(values['d-v']!, 10),
      textFamily: values['text-encoder'] ? family(values['text-encoder'], '--text-encoder') : undefined,
      visualFamily: values['visual-encoder'] ? family(values['visual-encoder'], '--visual-encoder') : undefined,
    });
    console.log(`wrote ${manifest}`);
    return 0;
  } catch (err) {
    if (err instanceof AdapterError || err instanceof MediaError) {
      console.error(`error: ${err.message}`);
      return 1;
    }
    console.error(`internal error: ${(err as Error).stack}`);
    return 2;
  }
}

if (import.meta.url === `file://${process.argv[1]}`) {
  process.exit(main(process.argv.slice(2)));
}
