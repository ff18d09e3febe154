"""Interaction-centric temporal aggregation and function-level fusion.

Frame pooling weights come from a softmax over raw per-frame HOI states
divided by a temperature, so interaction frames dominate the clip
feature.  Function-level fusion combines per-function text and clip
features with sum-normalized grounding scores.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .featstore import FunctionRecord


@dataclass
class AggregationConfig:
    temperature: float = 1.0
    use_hoi: bool = True
    use_global: bool = False  # pick E_g over pooled frames when present

    def __post_init__(self) -> None:
        if not np.isfinite(self.temperature) or self.temperature <= 0:
            raise ValidationError(f"temperature must be finite and > 0, got {self.temperature}")


@dataclass
class FusedContext:
    text: np.ndarray  # [d_t]
    visual: np.ndarray  # [d_v]


def hoi_weights(states: np.ndarray, temperature: float) -> np.ndarray:
    """softmax(states / temperature); sums to 1, every weight positive."""
    if not np.isfinite(temperature) or temperature <= 0:
        raise ValidationError(f"temperature must be finite and > 0, got {temperature}")
    logits = np.asarray(states, dtype=np.float64) / temperature
    logits -= logits.max()
    w = np.exp(logits)
    return w / w.sum()


def aggregate_clip(frames: np.ndarray, states: np.ndarray, cfg: AggregationConfig) -> np.ndarray:
    """HOI-weighted frame pooling; plain temporal mean when use_hoi is off."""
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2 or frames.shape[0] != len(states):
        raise ValidationError(
            f"aggregate_clip: frames {frames.shape} do not match {len(states)} states"
        )
    if cfg.use_hoi:
        return hoi_weights(states, cfg.temperature) @ frames
    return frames.mean(axis=0)


def fuse_functions(
    functions: list[FunctionRecord], grounding: np.ndarray, cfg: AggregationConfig
) -> FusedContext:
    """Grounding-weighted combination of function text and clip features.

    Weights are grounding scores normalized to sum 1; an all-zero
    grounding falls back to uniform weights.
    """
    n = len(functions)
    grounding = np.asarray(grounding, dtype=np.float64)
    if grounding.shape != (n,):
        raise ValidationError(f"fuse_functions: {grounding.shape[0]} scores for {n} functions")
    if np.isnan(grounding).any():
        raise ValidationError("fuse_functions: NaN in grounding scores")

    total = grounding.sum()
    g = grounding / total if total > 0 else np.full(n, 1.0 / n)

    clips = []
    for fn in functions:
        if np.isnan(fn.frame_embeddings).any() or np.isnan(fn.text_embedding).any():
            raise ValidationError(f"fuse_functions: NaN in function {fn.id} embeddings")
        if cfg.use_global and fn.global_embedding is not None:
            if np.isnan(fn.global_embedding).any():
                raise ValidationError(f"fuse_functions: NaN in function {fn.id} global embedding")
            clips.append(np.asarray(fn.global_embedding, dtype=np.float64))
        else:
            clips.append(aggregate_clip(fn.frame_embeddings, fn.hoi_states, cfg))

    text = g @ np.stack([np.asarray(fn.text_embedding, dtype=np.float64) for fn in functions])
    visual = g @ np.stack(clips)
    return FusedContext(text=text, visual=visual)
