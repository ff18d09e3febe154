/**
 * Raw AssistQ-style dataset layout:
 *
 *   raw/
 *     <task_dir>/
 *       task.json                      ids, prose, step structure
 *       clips/<func_id>/frame_*.ppm    1-fps frames, sorted by name
 *       clips/<func_id>/hoi.json       optional recorded HOI states
 *       buttons/<question_id>/<step>/<cand>.ppm
 *
 * task.json:
 *   {
 *     "task_id": "...", "split": "train",
 *     "functions": [{"id": "f0", "paragraph": "Press the nozzle ..."}],
 *     "questions": [
 *       {"id": "q0", "question": "How do I ...?",
 *        "steps": [{"answers": ["press ...", "turn ..."], "correct": 0}]}
 *     ]
 *   }
 */

import { readFileSync, readdirSync } from 'node:fs';
import { join } from 'node:path';

import { AdapterError } from './encoders.js';

export interface RawFunction {
  id: string;
  paragraph: string;
  clipDir: string;
  framePaths: string[];
}

export interface RawStep {
  answers: string[];
  buttonPaths: string[];
  correct: number;
}

export interface RawQuestion {
  id: string;
  question: string;
  steps: RawStep[];
}

export interface RawTask {
  taskId: string;
  split: string;
  functions: RawFunction[];
  questions: RawQuestion[];
}

export function tokenize(prose: string): string[] {
  return prose
    .toLowerCase()
    .replace(/[^\p{L}\p{N}\s]/gu, ' ')
    .split(/\s+/)
    .filter((t) => t.length > 0);
}

function listFrames(clipDir: string): string[] {
  let names: string[];
  try {
    names = readdirSync(clipDir);
  } catch (err) {
    throw new AdapterError(`cannot list clip ${clipDir}: ${(err as Error).message}`);
  }
  return names
    .filter((n) => /^frame_.*\.(ppm|pgm)$/.test(n))
    .sort()
    .map((n) => join(clipDir, n));
}

export function loadRawTask(taskDir: string): RawTask {
  let doc: any;
  try {
    doc = JSON.parse(readFileSync(join(taskDir, 'task.json'), 'utf-8'));
  } catch (err) {
    throw new AdapterError(`${taskDir}: cannot read task.json: ${(err as Error).message}`);
  }
  const required = ['task_id', 'functions', 'questions'];
  for (const key of required) {
    if (!(key in doc)) throw new AdapterError(`${taskDir}/task.json: missing ${key}`);
  }
  const functions: RawFunction[] = doc.functions.map((f: any) => {
    const clipDir = join(taskDir, 'clips', f.id);
    const framePaths = listFrames(clipDir);
    if (framePaths.length === 0) throw new AdapterError(`${clipDir}: no frames`);
    return { id: f.id, paragraph: f.paragraph ?? '', clipDir, framePaths };
  });
  const questions: RawQuestion[] = doc.questions.map((q: any) => ({
    id: q.id,
    question: q.question ?? '',
    steps: q.steps.map((s: any, stepIdx: number) => {
      const answers: string[] = s.answers ?? [];
      if (answers.length < 2) {
        throw new AdapterError(`${taskDir} ${q.id} step ${stepIdx}: needs >= 2 answers`);
      }
      const correct = s.correct ?? 0;
      if (correct < 0 || correct >= answers.length) {
        throw new AdapterError(`${taskDir} ${q.id} step ${stepIdx}: correct index out of range`);
      }
      return {
        answers,
        correct,
        buttonPaths: answers.map((_: string, c: number) =>
          join(taskDir, 'buttons', q.id, String(stepIdx), `${c}.ppm`),
        ),
      };
    }),
  }));
  return { taskId: doc.task_id, split: doc.split ?? 'train', functions, questions };
}

export function listRawTasks(rawDir: string): string[] {
  let names: string[];
  try {
    names = readdirSync(rawDir, { withFileTypes: true })
      .filter((e) => e.isDirectory())
      .map((e) => e.name)
      .sort();
  } catch (err) {
    throw new AdapterError(`cannot list raw dir ${rawDir}: ${(err as Error).message}`);
  }
  if (names.length === 0) throw new AdapterError(`${rawDir}: no task directories`);
  return names.map((n) => join(rawDir, n));
}
