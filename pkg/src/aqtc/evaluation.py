"""Candidate ranking, Recall@1/Recall@3, and the ablation harness."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .aggregation import AggregationConfig
from .errors import ValidationError
from .featstore import TaskManifest
from .pipeline import PreparedQuestion, prepare_questions, score_questions
from .scorer import ScorerConfig, ScoreTensor


@dataclass
class StepRank:
    question_id: str
    step_idx: int
    rank_of_gt: int
    n_candidates: int


@dataclass
class EvalResult:
    r1: float
    r3: float
    per_step: list[StepRank]


def rank_of_truth(scores: np.ndarray, gt: int) -> int:
    """1-based rank of the ground-truth candidate; ties go to the earlier index."""
    scores = np.asarray(scores)
    if np.isnan(scores).any():
        raise ValidationError("rank_of_truth: NaN score")
    if not 0 <= gt < len(scores):
        raise ValidationError(f"rank_of_truth: gt {gt} out of range for {len(scores)} scores")
    above = int((scores > scores[gt]).sum())
    tied_before = int((scores[:gt] == scores[gt]).sum())
    return 1 + above + tied_before


def evaluate(score_tensors: list[ScoreTensor], prepared: list[PreparedQuestion]) -> EvalResult:
    """Recall@k over every step of every question: fraction with rank <= k."""
    if len(score_tensors) != len(prepared):
        raise ValidationError(
            f"evaluate: {len(score_tensors)} score tensors for {len(prepared)} questions"
        )
    per_step = []
    for tensor, prep in zip(score_tensors, prepared):
        q = prep.question
        if tensor.question_id != q.id or len(tensor.step_probs) != len(q.steps):
            raise ValidationError(f"evaluate: score tensor misaligned with question {q.id}")
        for s_idx, (probs, step) in enumerate(zip(tensor.step_probs, q.steps)):
            if len(probs) != len(step.candidates):
                raise ValidationError(
                    f"evaluate: question {q.id} step {s_idx} has {len(step.candidates)} "
                    f"candidates but {len(probs)} scores"
                )
            per_step.append(
                StepRank(
                    question_id=q.id,
                    step_idx=s_idx,
                    rank_of_gt=rank_of_truth(probs, step.ground_truth_index),
                    n_candidates=len(step.candidates),
                )
            )
    total = len(per_step)
    r1 = sum(1 for s in per_step if s.rank_of_gt <= 1) / total
    r3 = sum(1 for s in per_step if s.rank_of_gt <= 3) / total
    return EvalResult(r1=r1, r3=r3, per_step=per_step)


def evaluate_params(params, tasks: list[TaskManifest], agg_cfg: AggregationConfig, split: str | None = None) -> EvalResult:
    """Convenience wrapper: prepare, score at inference, evaluate."""
    prepared = prepare_questions(tasks, agg_cfg, split=split)
    if not prepared:
        raise ValidationError(f"evaluate_params: no questions in split {split!r}")
    return evaluate(score_questions(params, prepared), prepared)


@dataclass
class AblationRow:
    use_hoi: bool
    use_global: bool
    temperature: float
    result: EvalResult


def run_ablation(
    tasks: list[TaskManifest],
    grid: list[dict],
    train_cfg,
    scorer_cfg: ScorerConfig,
) -> list[AblationRow]:
    """Train + evaluate one model per grid point with a shared seed.

    Each grid point may set use_hoi, use_global, and temperature.
    Models train on the train split; evaluation uses the test split when
    the dataset has one, otherwise the train split.
    """
    from .training import train  # local import to avoid a cycle

    eval_split = "test" if any(t.split == "test" for t in tasks) else "train"
    rows = []
    for point in grid:
        agg_cfg = AggregationConfig(
            temperature=float(point.get("temperature", 1.0)),
            use_hoi=bool(point.get("use_hoi", True)),
            use_global=bool(point.get("use_global", False)),
        )
        params, _ = train(tasks, train_cfg, scorer_cfg, agg_cfg)
        result = evaluate_params(params, tasks, agg_cfg, split=eval_split)
        rows.append(
            AblationRow(
                use_hoi=agg_cfg.use_hoi,
                use_global=agg_cfg.use_global,
                temperature=agg_cfg.temperature,
                result=result,
            )
        )
    return rows
