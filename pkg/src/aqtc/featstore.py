"""Dataset model, JSON manifest I/O, and the synthetic fixture generator.

A dataset is a JSON manifest plus one FEATPACK file per task.  The
manifest holds ids, tokens, and step structure; every dense array lives
in the task's FEATPACK under namespaced keys:

    E_l/<func_id>              f32 [T, d_v]   per-frame clip embeddings
    E_g/<func_id>              f32 [d_v]      optional global clip embedding
    E_ft/<func_id>             f32 [d_t]      raw paragraph text embedding
    S/<func_id>                i8  [T]        per-frame HOI states
    E_q/<question_id>          f32 [d_t]      question embedding
    E_a_t/<q>/<step>/<cand>    f32 [d_t]      candidate text embedding
    E_a_v/<q>/<step>/<cand>    f32 [d_v]      candidate button embedding

See docs/data-contract.md for the full schema.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, MissingFeatureError, ValidationError
from .featpack import read_featpack, write_featpack

MANIFEST_FORMAT = "aqtc-manifest-v1"
HOI_STATES = (-1, 0, 1)


@dataclass
class Dims:
    d_v: int
    d_t: int


@dataclass
class FunctionRecord:
    id: str
    paragraph_tokens: list[str]
    frame_embeddings: np.ndarray  # f32 [T, d_v]
    hoi_states: np.ndarray  # i8 [T]
    text_embedding: np.ndarray  # f32 [d_t], raw paragraph embedding
    global_embedding: np.ndarray | None = None  # f32 [d_v]


@dataclass
class CandidateRecord:
    text_embedding: np.ndarray  # f32 [d_t]
    button_embedding: np.ndarray  # f32 [d_v]


@dataclass
class StepRecord:
    candidates: list[CandidateRecord]
    ground_truth_index: int


@dataclass
class QuestionRecord:
    id: str
    question_tokens: list[str]
    question_embedding: np.ndarray  # f32 [d_t]
    steps: list[StepRecord]


@dataclass
class TaskManifest:
    task_id: str
    functions: list[FunctionRecord]
    questions: list[QuestionRecord]
    dims: Dims
    split: str = "train"


# -- validation ---------------------------------------------------------


def _check_array(name: str, arr: np.ndarray, dtype: np.dtype, shape: tuple[int, ...]) -> None:
    if arr.dtype != dtype:
        raise ValidationError(f"{name}: dtype {arr.dtype}, expected {dtype}")
    if arr.shape != shape:
        raise ValidationError(f"{name}: shape {arr.shape}, expected {shape}")


def validate_task(task: TaskManifest) -> None:
    """Check every typed invariant of a task; raise ValidationError on the first violation."""
    d_v, d_t = task.dims.d_v, task.dims.d_t
    if task.split not in ("train", "test"):
        raise ValidationError(f"task {task.task_id}: split must be train|test, got {task.split!r}")
    if not task.functions:
        raise ValidationError(f"task {task.task_id}: needs at least one function")
    seen = set()
    for fn in task.functions:
        if fn.id in seen:
            raise ValidationError(f"task {task.task_id}: duplicate function id {fn.id!r}")
        seen.add(fn.id)
        t_frames = fn.hoi_states.shape[0] if fn.hoi_states.ndim == 1 else -1
        if fn.hoi_states.dtype != np.int8 or fn.hoi_states.ndim != 1 or t_frames < 1:
            raise ValidationError(f"function {fn.id}: hoi_states must be a non-empty i8 vector")
        bad = set(np.unique(fn.hoi_states)) - set(HOI_STATES)
        if bad:
            raise ValidationError(f"function {fn.id}: hoi_states outside {{-1,0,1}}: {sorted(bad)}")
        _check_array(f"function {fn.id}: frame_embeddings", fn.frame_embeddings, np.dtype(np.float32), (t_frames, d_v))
        _check_array(f"function {fn.id}: text_embedding", fn.text_embedding, np.dtype(np.float32), (d_t,))
        if fn.global_embedding is not None:
            _check_array(f"function {fn.id}: global_embedding", fn.global_embedding, np.dtype(np.float32), (d_v,))
    for q in task.questions:
        _check_array(f"question {q.id}: question_embedding", q.question_embedding, np.dtype(np.float32), (d_t,))
        if not q.steps:
            raise ValidationError(f"question {q.id}: needs at least one step")
        for s_idx, step in enumerate(q.steps):
            n = len(step.candidates)
            if n < 2:
                raise ValidationError(f"question {q.id} step {s_idx}: needs >= 2 candidates, got {n}")
            if not 0 <= step.ground_truth_index < n:
                raise ValidationError(
                    f"question {q.id} step {s_idx}: ground_truth_index {step.ground_truth_index} not in [0, {n})"
                )
            for c_idx, cand in enumerate(step.candidates):
                where = f"question {q.id} step {s_idx} candidate {c_idx}"
                _check_array(f"{where}: text_embedding", cand.text_embedding, np.dtype(np.float32), (d_t,))
                _check_array(f"{where}: button_embedding", cand.button_embedding, np.dtype(np.float32), (d_v,))
                if not (np.isfinite(cand.text_embedding).all() and np.isfinite(cand.button_embedding).all()):
                    raise ValidationError(f"{where}: embeddings must be finite")


def validate_dataset(tasks: list[TaskManifest]) -> None:
    if not tasks:
        raise ValidationError("dataset has no tasks")
    dims0 = tasks[0].dims
    for task in tasks:
        if (task.dims.d_v, task.dims.d_t) != (dims0.d_v, dims0.d_t):
            raise ValidationError(
                f"task {task.task_id}: dims ({task.dims.d_v},{task.dims.d_t}) "
                f"differ from dataset dims ({dims0.d_v},{dims0.d_t})"
            )
        validate_task(task)


# -- manifest I/O -------------------------------------------------------


def _need(pack: dict[str, np.ndarray], key: str, pack_path: str) -> np.ndarray:
    if key not in pack:
        raise MissingFeatureError(key, pack_path)
    return pack[key]


def _task_from_json(entry: dict, pack: dict[str, np.ndarray], pack_path: str, dims: Dims) -> TaskManifest:
    functions = []
    for fj in entry["functions"]:
        fid = fj["id"]
        functions.append(
            FunctionRecord(
                id=fid,
                paragraph_tokens=list(fj["paragraph_tokens"]),
                frame_embeddings=_need(pack, f"E_l/{fid}", pack_path),
                hoi_states=_need(pack, f"S/{fid}", pack_path),
                text_embedding=_need(pack, f"E_ft/{fid}", pack_path),
                global_embedding=pack.get(f"E_g/{fid}"),
            )
        )
    questions = []
    for qj in entry["questions"]:
        qid = qj["id"]
        steps = []
        for s_idx, sj in enumerate(qj["steps"]):
            n = int(sj["num_candidates"])
            cands = [
                CandidateRecord(
                    text_embedding=_need(pack, f"E_a_t/{qid}/{s_idx}/{c}", pack_path),
                    button_embedding=_need(pack, f"E_a_v/{qid}/{s_idx}/{c}", pack_path),
                )
                for c in range(n)
            ]
            steps.append(StepRecord(candidates=cands, ground_truth_index=int(sj["ground_truth_index"])))
        questions.append(
            QuestionRecord(
                id=qid,
                question_tokens=list(qj["question_tokens"]),
                question_embedding=_need(pack, f"E_q/{qid}", pack_path),
                steps=steps,
            )
        )
    return TaskManifest(
        task_id=entry["task_id"],
        functions=functions,
        questions=questions,
        dims=dims,
        split=entry.get("split", "train"),
    )


def load_manifest(manifest_path: str | Path, jobs: int = 1) -> list[TaskManifest]:
    """Load and fully validate a dataset.

    FEATPACK files referenced by the manifest are loaded with up to
    *jobs* parallel workers; records are immutable after this returns.
    """
    manifest_path = Path(manifest_path)
    try:
        doc = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{manifest_path}: not valid JSON: {exc}") from exc
    except OSError as exc:
        raise FormatError(f"{manifest_path}: cannot read manifest: {exc}") from exc

    try:
        if doc["format"] != MANIFEST_FORMAT:
            raise FormatError(f"{manifest_path}: unknown manifest format {doc.get('format')!r}")
        dims = Dims(d_v=int(doc["dims"]["d_v"]), d_t=int(doc["dims"]["d_t"]))
        entries = doc["tasks"]
        pack_rels = [entry["featpack"] for entry in entries]
    except (KeyError, TypeError) as exc:
        raise FormatError(f"{manifest_path}: manifest missing field: {exc}") from exc

    base = manifest_path.parent
    pack_paths = [base / rel for rel in pack_rels]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            packs = list(pool.map(read_featpack, pack_paths))
    else:
        packs = [read_featpack(p) for p in pack_paths]

    tasks = []
    try:
        for entry, pack, rel in zip(entries, packs, pack_rels):
            tasks.append(_task_from_json(entry, pack, rel, dims))
    except (KeyError, TypeError) as exc:
        raise FormatError(f"{manifest_path}: manifest missing field: {exc}") from exc
    validate_dataset(tasks)
    return tasks


def save_manifest(tasks: list[TaskManifest], out_dir: str | Path, manifest_name: str = "manifest.json") -> Path:
    """Write manifest.json plus one FEATPACK per task under *out_dir*.

    Output is byte-deterministic for identical inputs.
    """
    validate_dataset(tasks)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    doc = {
        "format": MANIFEST_FORMAT,
        "dims": {"d_v": tasks[0].dims.d_v, "d_t": tasks[0].dims.d_t},
        "tasks": [],
    }
    for task in tasks:
        pack_rel = f"{task.task_id}.featpack"
        pack: dict[str, np.ndarray] = {}
        fns = []
        for fn in task.functions:
            pack[f"E_l/{fn.id}"] = fn.frame_embeddings
            pack[f"S/{fn.id}"] = fn.hoi_states
            pack[f"E_ft/{fn.id}"] = fn.text_embedding
            if fn.global_embedding is not None:
                pack[f"E_g/{fn.id}"] = fn.global_embedding
            fns.append({"id": fn.id, "paragraph_tokens": fn.paragraph_tokens})
        qs = []
        for q in task.questions:
            pack[f"E_q/{q.id}"] = q.question_embedding
            steps = []
            for s_idx, step in enumerate(q.steps):
                for c_idx, cand in enumerate(step.candidates):
                    pack[f"E_a_t/{q.id}/{s_idx}/{c_idx}"] = cand.text_embedding
                    pack[f"E_a_v/{q.id}/{s_idx}/{c_idx}"] = cand.button_embedding
                steps.append(
                    {"num_candidates": len(step.candidates), "ground_truth_index": step.ground_truth_index}
                )
            qs.append({"id": q.id, "question_tokens": q.question_tokens, "steps": steps})
        write_featpack(pack, out_dir / pack_rel)
        doc["tasks"].append(
            {
                "task_id": task.task_id,
                "split": task.split,
                "featpack": pack_rel,
                "functions": fns,
                "questions": qs,
            }
        )
    manifest_path = out_dir / manifest_name
    manifest_path.write_text(json.dumps(doc, indent=2) + "\n")
    return manifest_path


# -- synthetic fixture generator ----------------------------------------

# Common "device manual" vocabulary shared by every paragraph/question.
_BASE_WORDS = (
    "the to button press hold turn device mode set screen until light "
    "panel select menu open close power start stop water heat speed timer"
).split()

# Per-function distinctive words; high idf makes grounding informative.
_DISTINCT_STEMS = (
    "nozzle valve filter lid dial knob latch tray hose brush dock lever "
    "spout grinder carafe reservoir blade whisk probe vent gasket burner "
    "rack drawer hinge clamp pump sensor fuse coil belt roller paddle "
    "funnel sieve spigot crank pedal switch antenna"
).split()

# Embedding scales.  Answer-discriminative signal lives ONLY in
# interaction (state 1) frames; no-hand (state -1) frames carry strong
# per-frame distractor junk so plain mean pooling degrades the context.
_SIG_SCALE = 2.0  # function signature magnitude (state-1 frames, buttons, globals)
_DISTRACTOR_SCALE = 3.0  # junk magnitude in state -1 frames
_NEUTRAL_SCALE = 1.0  # shared "illustration" content in state 0 frames
_FRAME_NOISE = 0.1
_CAND_NOISE = 0.15
_TEXT_NOISE = 0.05


@dataclass
class SynthSpec:
    tasks: int
    functions_per_task: int
    questions_per_task: int
    steps_per_question: int
    candidates_per_step: int
    d_v: int
    d_t: int

    def __post_init__(self) -> None:
        for name in ("tasks", "functions_per_task", "questions_per_task", "steps_per_question", "d_v", "d_t"):
            if getattr(self, name) < 1:
                raise ValidationError(f"synth spec: {name} must be >= 1")
        if self.candidates_per_step < 2:
            raise ValidationError("synth spec: candidates_per_step must be >= 2")


def _unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def _distinct_word(j: int) -> str:
    stem = _DISTINCT_STEMS[j % len(_DISTINCT_STEMS)]
    return stem if j < len(_DISTINCT_STEMS) else f"{stem}{j // len(_DISTINCT_STEMS)}"


def generate_synthetic(
    seed: int, spec: SynthSpec, split: str = "train", task_prefix: str = "task"
) -> list[TaskManifest]:
    """Deterministic learnable fixture; a pure function of (seed, spec).

    Each question TF-IDF-grounds to one function via that function's
    distinctive paragraph word.  The ground-truth candidate's button
    embedding matches the grounded function's visual signature, which is
    carried exclusively by interaction frames; absence frames hold loud
    distractors.  Candidate and paragraph text embeddings are
    deliberately non-identifying so the visual path decides the answer.
    """
    rng = np.random.default_rng(seed)
    tasks = []
    for t in range(spec.tasks):
        n = spec.functions_per_task
        signatures = [_unit(rng, spec.d_v) * _SIG_SCALE for _ in range(n)]
        text_base = _unit(rng, spec.d_t)
        neutral = _unit(rng, spec.d_v) * _NEUTRAL_SCALE

        functions = []
        for j in range(n):
            t_frames = int(rng.integers(4, 9))
            n_pos = 2
            n_neg = max(1, t_frames // 3)
            states = np.array([1] * n_pos + [-1] * n_neg + [0] * (t_frames - n_pos - n_neg), dtype=np.int8)
            states = states[rng.permutation(t_frames)]
            frames = np.empty((t_frames, spec.d_v))
            for i, st in enumerate(states):
                if st == 1:
                    frames[i] = signatures[j]
                elif st == 0:
                    frames[i] = neutral
                else:
                    frames[i] = _unit(rng, spec.d_v) * _DISTRACTOR_SCALE
                frames[i] += rng.standard_normal(spec.d_v) * _FRAME_NOISE
            paragraph = [str(w) for w in rng.choice(_BASE_WORDS, size=4)] + [_distinct_word(j)] * 4
            paragraph = [paragraph[k] for k in rng.permutation(len(paragraph))]
            functions.append(
                FunctionRecord(
                    id=f"f{j}",
                    paragraph_tokens=paragraph,
                    frame_embeddings=frames.astype(np.float32),
                    hoi_states=states,
                    text_embedding=(text_base + rng.standard_normal(spec.d_t) * _TEXT_NOISE).astype(np.float32),
                    global_embedding=(signatures[j] + rng.standard_normal(spec.d_v) * _TEXT_NOISE).astype(np.float32),
                )
            )

        questions = []
        for i in range(spec.questions_per_task):
            target = i % n
            tokens = [str(w) for w in rng.choice(_BASE_WORDS, size=2)] + [_distinct_word(target)] * 3
            tokens = [tokens[k] for k in rng.permutation(len(tokens))]
            steps = []
            for _ in range(spec.steps_per_question):
                gt = int(rng.integers(spec.candidates_per_step))
                others = [k for k in range(n) if k != target]
                cands = []
                for c in range(spec.candidates_per_step):
                    if c == gt:
                        button = signatures[target] + rng.standard_normal(spec.d_v) * _CAND_NOISE
                    elif others:
                        pick = others[int(rng.integers(len(others)))]
                        button = signatures[pick] + rng.standard_normal(spec.d_v) * _CAND_NOISE
                    else:
                        button = _unit(rng, spec.d_v) * _SIG_SCALE
                    cands.append(
                        CandidateRecord(
                            text_embedding=(_unit(rng, spec.d_t) * 0.5).astype(np.float32),
                            button_embedding=button.astype(np.float32),
                        )
                    )
                steps.append(StepRecord(candidates=cands, ground_truth_index=gt))
            questions.append(
                QuestionRecord(
                    id=f"{task_prefix}{t}q{i}",
                    question_tokens=tokens,
                    question_embedding=_unit(rng, spec.d_t).astype(np.float32),
                    steps=steps,
                )
            )
        tasks.append(
            TaskManifest(
                task_id=f"{task_prefix}{t}",
                functions=functions,
                questions=questions,
                dims=Dims(d_v=spec.d_v, d_t=spec.d_t),
                split=split,
            )
        )
    return tasks
