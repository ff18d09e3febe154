/**
 * Export pipeline: raw media + prose in, manifest + FEATPACK out.
 *
 * The adapter only extracts features and replays recorded HOI states;
 * grounding, pooling, and scoring stay in the engine.
 */

import { mkdirSync, renameSync, writeFileSync } from 'node:fs';
import { join } from 'node:path';

import { AdapterError, EncoderFamily, buildEncoders, isVideoCapable } from './encoders.js';
import { DenseArray, writeFeatpack } from './featpack.js';
import { AnnotationHoiDetector, HoiDetector } from './hoi.js';
import { decodeImage } from './ppm.js';
import { RawTask, listRawTasks, loadRawTask, tokenize } from './rawdata.js';

export interface AdapterConfig {
  rawDir: string;
  outDir: string;
  family: EncoderFamily;
  variant: 'local' | 'global';
  dT: number;
  dV: number;
  /** Alignment-override hooks; differing families are refused. */
  textFamily?: EncoderFamily;
  visualFamily?: EncoderFamily;
}

function f32(shape: number[], data: Float32Array): DenseArray {
  return { dtype: 'f32', shape, data };
}

export function exportTask(
  task: RawTask,
  cfg: AdapterConfig,
  detector: HoiDetector,
): { entry: Record<string, unknown>; pack: Map<string, DenseArray> } {
  const { text, visual } = buildEncoders(cfg.family, cfg.dT, cfg.dV, cfg.textFamily, cfg.visualFamily);
  const videoMode = cfg.variant === 'global';
  const pack = new Map<string, DenseArray>();

  const functions = task.functions.map((fn) => {
    const tokens = tokenize(fn.paragraph);
    if (tokens.length === 0) throw new AdapterError(`${task.taskId}/${fn.id}: empty paragraph`);
    pack.set(`E_ft/${fn.id}`, f32([cfg.dT], text.encode(tokens)));

    const frames = fn.framePaths.map(decodeImage);
    const flat = new Float32Array(frames.length * cfg.dV);
    frames.forEach((frame, i) => flat.set(visual.encodeImage(frame), i * cfg.dV));
    pack.set(`E_l/${fn.id}`, f32([frames.length, cfg.dV], flat));
    if (videoMode) {
      pack.set(`E_g/${fn.id}`, f32([cfg.dV], visual.encodeClip(frames)));
    }

    const states = detector.detectClip(fn.clipDir, frames.length);
    pack.set(`S/${fn.id}`, { dtype: 'i8', shape: [frames.length], data: states });
    return { id: fn.id, paragraph_tokens: tokens };
  });

  const questions = task.questions.map((q) => {
    const qTokens = tokenize(q.question);
    if (qTokens.length === 0) throw new AdapterError(`${task.taskId}/${q.id}: empty question`);
    pack.set(`E_q/${q.id}`, f32([cfg.dT], text.encode(qTokens)));
    const steps = q.steps.map((step, stepIdx) => {
      step.answers.forEach((answer, c) => {
        const aTokens = tokenize(answer);
        if (aTokens.length === 0) {
          throw new AdapterError(`${task.taskId}/${q.id} step ${stepIdx} candidate ${c}: empty answer`);
        }
        pack.set(`E_a_t/${q.id}/${stepIdx}/${c}`, f32([cfg.dT], text.encode(aTokens)));
        const button = decodeImage(step.buttonPaths[c]);
        pack.set(`E_a_v/${q.id}/${stepIdx}/${c}`, f32([cfg.dV], visual.encodeButton(button, videoMode)));
      });
      return { num_candidates: step.answers.length, ground_truth_index: step.correct };
    });
    return { id: q.id, question_tokens: qTokens, steps };
  });

  return {
    entry: {
      task_id: task.taskId,
      split: task.split,
      featpack: `${task.taskId}.featpack`,
      functions,
      questions,
    },
    pack,
  };
}

export function exportDataset(cfg: AdapterConfig, detector: HoiDetector = new AnnotationHoiDetector()): string {
  if (cfg.variant === 'global' && !isVideoCapable(cfg.family)) {
    throw new AdapterError(`variant=global needs a video-capable encoder; ${cfg.family} is not`);
  }
  if (cfg.dT < 1 || cfg.dV < 1) throw new AdapterError('embedding dims must be >= 1');

  mkdirSync(cfg.outDir, { recursive: true });
  const taskEntries: Record<string, unknown>[] = [];
  for (const taskDir of listRawTasks(cfg.rawDir)) {
    const task = loadRawTask(taskDir);
    const { entry, pack } = exportTask(task, cfg, detector);
    writeFeatpack(pack, join(cfg.outDir, `${task.taskId}.featpack`));
    taskEntries.push(entry);
  }
  const manifest = {
    format: 'aqtc-manifest-v1',
    dims: { d_v: cfg.dV, d_t: cfg.dT },
    tasks: taskEntries,
  };
  const manifestPath = join(cfg.outDir, 'manifest.json');
  const tmp = `${manifestPath}.tmp`;
  writeFileSync(tmp, JSON.stringify(manifest, null, 2) + '\n');
  renameSync(tmp, manifestPath);
  return manifestPath;
}
