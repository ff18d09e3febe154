/**
 * Hand-object-interaction states per frame: -1 no hand, 0 hand without
 * interaction, 1 interaction.
 *
 * The detector interface wraps whatever produces the states.  The
 * annotation detector replays a recorded detector output shipped next
 * to the clip (hoi.json); frames it cannot cover fall back to -1, the
 * "no hand" reading, with a warning.
 */

import { existsSync, readFileSync } from 'node:fs';

export interface HoiDetector {
  detectClip(clipDir: string, frameCount: number): Int8Array;
}

const VALID = new Set([-1, 0, 1]);

export class AnnotationHoiDetector implements HoiDetector {
  constructor(private warn: (msg: string) => void = (m) => console.warn(m)) {}

  detectClip(clipDir: string, frameCount: number): Int8Array {
    const states = new Int8Array(frameCount).fill(-1);
    const path = `${clipDir}/hoi.json`;
    if (!existsSync(path)) {
      this.warn(`${clipDir}: no hoi.json; marking all ${frameCount} frames as no-hand`);
      return states;
    }
    let recorded: unknown;
    try {
      recorded = JSON.parse(readFileSync(path, 'utf-8'));
    } catch (err) {
      this.warn(`${path}: unreadable (${(err as Error).message}); falling back to no-hand`);
      return states;
    }
    if (!Array.isArray(recorded)) {
      this.warn(`${path}: expected a JSON array; falling back to no-hand`);
      return states;
    }
    for (let i = 0; i < frameCount; i++) {
      const value = recorded[i];
      if (typeof value === 'number' && VALID.has(value)) {
        states[i] = value;
      } else {
        this.warn(`${path}: frame ${i} has no valid state; using -1`);
      }
    }
    return states;
  }
}

/** Degenerate detector: never sees a hand. */
export class NullHoiDetector implements HoiDetector {
  detectClip(_clipDir: string, frameCount: number): Int8Array {
    return new Int8Array(frameCount).fill(-1);
  }
}
