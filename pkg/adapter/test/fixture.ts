/** Synthesizes a raw AssistQ-style dataset (PPM frames, prose, HOI annotations). */

import { mkdirSync, writeFileSync } from 'node:fs';
import { join } from 'node:path';

export function writePpm(path: string, width: number, height: number, seed: number): void {
  const header = Buffer.from(`P6\n${width} ${height}\n255\n`, 'ascii');
  const pixels = Buffer.alloc(width * height * 3);
  let state = seed >>> 0 || 1;
  for (let i = 0; i < pixels.length; i++) {
    state = (Math.imul(state, 1664525) + 1013904223) >>> 0;
    pixels[i] = state & 0xff;
  }
  writeFileSync(path, Buffer.concat([header, pixels]));
}

export interface FixtureOptions {
  nTasks?: number;
  nFunctions?: number;
  nQuestions?: number;
  nSteps?: number;
  nCandidates?: number;
  framesPerClip?: number;
  withHoi?: boolean;
}

export function buildRawFixture(rawDir: string, opts: FixtureOptions = {}): void {
  const {
    nTasks = 1,
    nFunctions = 2,
    nQuestions = 2,
    nSteps = 2,
    nCandidates = 3,
    framesPerClip = 4,
    withHoi = true,
  } = opts;
  const parts = ['nozzle', 'valve', 'filter', 'lid', 'dial', 'knob'];
  for (let t = 0; t < nTasks; t++) {
    const taskDir = join(rawDir, `task_${t}`);
    const functions = [];
    for (let f = 0; f < nFunctions; f++) {
      const fid = `f${f}`;
      const clipDir = join(taskDir, 'clips', fid);
      mkdirSync(clipDir, { recursive: true });
      for (let i = 0; i < framesPerClip; i++) {
        writePpm(join(clipDir, `frame_${String(i).padStart(3, '0')}.ppm`), 24, 16, 1000 * t + 100 * f + i);
      }
      if (withHoi) {
        const states = Array.from({ length: framesPerClip }, (_, i) => (i % 3) - 1);
        writeFileSync(join(clipDir, 'hoi.json'), JSON.stringify(states));
      }
      functions.push({
        id: fid,
        paragraph: `Press the ${parts[f % parts.length]} to adjust the ${parts[f % parts.length]} setting.`,
      });
    }
    const questions = [];
    for (let q = 0; q < nQuestions; q++) {
      const qid = `q${q}`;
      const steps = [];
      for (let s = 0; s < nSteps; s++) {
        const answers = [];
        for (let c = 0; c < nCandidates; c++) {
          answers.push(`Turn the ${parts[c % parts.length]} ${c % 2 ? 'left' : 'right'} and hold.`);
          const buttonDir = join(taskDir, 'buttons', qid, String(s));
          mkdirSync(buttonDir, { recursive: true });
          writePpm(join(buttonDir, `${c}.ppm`), 12, 12, 9000 + 100 * q + 10 * s + c);
        }
        steps.push({ answers, correct: (q + s) % nCandidates });
      }
      questions.push({
        id: qid,
        question: `How do I use the ${parts[q % parts.length]} on this device?`,
        steps,
      });
    }
    writeFileSync(
      join(taskDir, 'task.json'),
      JSON.stringify({ task_id: `task${t}`, split: 'train', functions, questions }, null, 2),
    );
  }
}
