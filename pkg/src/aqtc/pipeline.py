"""Shared dataset preparation: grounding scores and fused contexts.

The grounded context of a question depends only on the dataset and the
aggregation config, never on trainable parameters, so it is computed
once and reused across epochs and models.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .aggregation import AggregationConfig, FusedContext, fuse_functions
from .featstore import QuestionRecord, TaskManifest
from .grounding import fit_tfidf, score_question
from .scorer import INFERENCE, Params, ScoreTensor, forward_question


@dataclass
class PreparedQuestion:
    task_id: str
    split: str
    question: QuestionRecord
    ctx: FusedContext
    grounding: np.ndarray  # [n_functions] of the owning task


def prepare_questions(
    tasks: list[TaskManifest], agg_cfg: AggregationConfig, split: str | None = None
) -> list[PreparedQuestion]:
    """Ground and fuse every question, in manifest order.

    The TF-IDF model is fitted per task over that task's paragraphs.
    Pass split="train"/"test" to keep only those tasks.
    """
    prepared = []
    for task in tasks:
        if split is not None and task.split != split:
            continue
        model = fit_tfidf([fn.paragraph_tokens for fn in task.functions])
        for question in task.questions:
            scores = score_question(model, question.question_tokens)
            ctx = fuse_functions(task.functions, scores, agg_cfg)
            prepared.append(
                PreparedQuestion(
                    task_id=task.task_id,
                    split=task.split,
                    question=question,
                    ctx=ctx,
                    grounding=scores,
                )
            )
    return prepared


def score_questions(
    params: Params, prepared: list[PreparedQuestion], mode: str = INFERENCE
) -> list[ScoreTensor]:
    """Run the scorer over prepared questions; returns aligned ScoreTensors."""
    return [forward_question(params, p.ctx, p.question, mode=mode)[0] for p in prepared]
