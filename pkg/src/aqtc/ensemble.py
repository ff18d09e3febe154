"""Linear score-level fusion of multiple trained models."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .evaluation import EvalResult, evaluate
from .featstore import TaskManifest
from .pipeline import prepare_questions, score_questions
from .scorer import ScoreTensor, _softmax
from .training import load_checkpoint


@dataclass
class EnsembleMember:
    checkpoint_path: str
    weight: float = 1.0


@dataclass
class EnsembleSpec:
    members: list[EnsembleMember]
    normalize: bool = True  # renormalize weights to sum 1
    fuse_logits: bool = False  # combine pre-softmax scores instead of probabilities

    def __post_init__(self) -> None:
        if not self.members:
            raise ValidationError("ensemble needs at least one member")
        if any(m.weight < 0 for m in self.members):
            raise ValidationError("ensemble weights must be >= 0")
        if sum(m.weight for m in self.members) <= 0:
            raise ValidationError("ensemble weights must not all be zero")


def _normalized(weights: np.ndarray, normalize: bool) -> np.ndarray:
    weights = np.asarray(weights, dtype=np.float64)
    if (weights < 0).any() or weights.sum() <= 0:
        raise ValidationError("ensemble weights must be >= 0 and not all zero")
    if normalize:
        return weights / weights.sum()
    if not np.isclose(weights.sum(), 1.0, atol=1e-9):
        raise ValidationError("weights must sum to 1 when normalize is off")
    return weights


def combine(
    score_tensors: list[list[ScoreTensor]], weights: np.ndarray, normalize: bool = True
) -> list[ScoreTensor]:
    """Convex combination of aligned per-step probability vectors.

    `score_tensors[m][q]` is model m's tensor for question q; rows of
    the output still sum to 1.
    """
    w = _normalized(weights, normalize)
    if len(score_tensors) != len(w):
        raise ValidationError(f"{len(score_tensors)} models but {len(w)} weights")
    first = score_tensors[0]
    for tensors in score_tensors[1:]:
        if len(tensors) != len(first):
            raise ValidationError("ensemble members scored different question counts")
        for a, b in zip(first, tensors):
            if a.question_id != b.question_id or len(a.step_probs) != len(b.step_probs):
                raise ValidationError(f"ensemble misaligned at question {a.question_id}")
            if any(len(pa) != len(pb) for pa, pb in zip(a.step_probs, b.step_probs)):
                raise ValidationError(f"ensemble candidate counts differ at question {a.question_id}")

    combined = []
    for q_idx, ref in enumerate(first):
        probs = [
            sum(w[m] * score_tensors[m][q_idx].step_probs[s] for m in range(len(w)))
            for s in range(len(ref.step_probs))
        ]
        combined.append(ScoreTensor(question_id=ref.question_id, step_probs=probs))
    return combined


def combine_logits(
    score_tensors: list[list[ScoreTensor]], weights: np.ndarray, normalize: bool = True
) -> list[ScoreTensor]:
    """Weighted sum of pre-softmax logits, re-softmaxed per step."""
    w = _normalized(weights, normalize)
    combined = []
    for q_idx, ref in enumerate(score_tensors[0]):
        probs = []
        for s in range(len(ref.step_logits)):
            logits = sum(w[m] * score_tensors[m][q_idx].step_logits[s] for m in range(len(w)))
            probs.append(_softmax(logits))
        combined.append(ScoreTensor(question_id=ref.question_id, step_probs=probs))
    return combined


@dataclass
class EnsembleResult:
    ensemble: EvalResult
    members: list[EvalResult] = field(default_factory=list)


def evaluate_ensemble(
    spec: EnsembleSpec, tasks: list[TaskManifest], split: str | None = None
) -> EnsembleResult:
    """Score every member, fuse, and report ensemble plus solo results.

    Each member runs under its own checkpointed aggregation config, so
    an ensemble may mix HOI-on and HOI-off models.
    """
    dims = tasks[0].dims
    member_tensors = []
    member_results = []
    prepared_ref = None
    for member in spec.members:
        params, scorer_cfg, agg_cfg = load_checkpoint(member.checkpoint_path)
        if (scorer_cfg.d_t, scorer_cfg.d_v) != (dims.d_t, dims.d_v):
            raise ValidationError(
                f"checkpoint {member.checkpoint_path}: dims ({scorer_cfg.d_t},{scorer_cfg.d_v}) "
                f"do not match dataset ({dims.d_t},{dims.d_v})"
            )
        prepared = prepare_questions(tasks, agg_cfg, split=split)
        if prepared_ref is None:
            prepared_ref = prepared
        tensors = score_questions(params, prepared)
        member_tensors.append(tensors)
        member_results.append(evaluate(tensors, prepared))

    weights = np.array([m.weight for m in spec.members])
    if spec.fuse_logits:
        fused = combine_logits(member_tensors, weights, normalize=spec.normalize)
    else:
        fused = combine(member_tensors, weights, normalize=spec.normalize)
    return EnsembleResult(ensemble=evaluate(fused, prepared_ref), members=member_results)
