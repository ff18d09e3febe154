"""Adam optimizer, training loop, checkpointing, and gradient checking."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .aggregation import AggregationConfig, FusedContext
from .errors import NumericalError, ValidationError
from .featstore import CandidateRecord, QuestionRecord, StepRecord, TaskManifest
from .featpack import read_featpack, write_featpack
from .pipeline import prepare_questions, score_questions
from .evaluation import evaluate
from .scorer import Params, ScorerConfig, init_params, loss_and_grad, param_shapes, zeros_like_params


@dataclass
class TrainConfig:
    learning_rate: float = 1e-4
    epochs: int = 100
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    shuffle: bool = True
    # Questions per optimizer step; None = one full batch per epoch.
    batch_questions: int | None = None
    # Select the best epoch on the test split (leaks test data; off by default).
    select_on_test: bool = False

    def __post_init__(self) -> None:
        if not self.learning_rate > 0:
            raise ValidationError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_questions is not None and self.batch_questions < 1:
            raise ValidationError("batch_questions must be >= 1 or None")


@dataclass
class AdamState:
    m: Params
    v: Params
    t: int = 0


def init_adam(params: Params) -> AdamState:
    return AdamState(m=zeros_like_params(params), v=zeros_like_params(params), t=0)


def adam_step(
    params: Params, grads: Params, state: AdamState, cfg: TrainConfig
) -> tuple[Params, AdamState]:
    """One bias-corrected Adam update; returns fresh params and state."""
    t = state.t + 1
    new_params: Params = {}
    new_m: Params = {}
    new_v: Params = {}
    for name, theta in params.items():
        g = grads[name]
        if np.isnan(g).any():
            raise NumericalError(f"NaN gradient for parameter {name}")
        m = cfg.beta1 * state.m[name] + (1.0 - cfg.beta1) * g
        v = cfg.beta2 * state.v[name] + (1.0 - cfg.beta2) * g * g
        m_hat = m / (1.0 - cfg.beta1**t)
        v_hat = v / (1.0 - cfg.beta2**t)
        new_params[name] = theta - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.eps)
        new_m[name] = m
        new_v[name] = v
    return new_params, AdamState(m=new_m, v=new_v, t=t)


@dataclass
class EpochStats:
    epoch: int
    loss: float  # mean per-step cross-entropy over the epoch's batches
    r1: float
    r3: float


def train(
    tasks: list[TaskManifest],
    cfg: TrainConfig,
    scorer_cfg: ScorerConfig,
    agg_cfg: AggregationConfig,
) -> tuple[Params, list[EpochStats]]:
    """Train on the train split; returns (best params by training loss, history).

    Contexts are grounded and fused once up front (they do not depend on
    trainable parameters).  Iteration order is fully determined by the
    two seeds, so identical inputs give bit-identical parameters.
    """
    prepared = prepare_questions(tasks, agg_cfg, split="train")
    if not prepared:
        raise ValidationError("train: dataset has no training questions")
    test_prepared = prepare_questions(tasks, agg_cfg, split="test") if cfg.select_on_test else []
    if cfg.select_on_test and not test_prepared:
        raise ValidationError("train: select_on_test set but dataset has no test split")

    rng = np.random.default_rng(cfg.seed)
    params = init_params(scorer_cfg)
    state = init_adam(params)
    history: list[EpochStats] = []
    best_params = {k: v.copy() for k, v in params.items()}
    best_key = -np.inf if cfg.select_on_test else np.inf

    n = len(prepared)
    batch = n if cfg.batch_questions is None else min(cfg.batch_questions, n)
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n) if cfg.shuffle else np.arange(n)
        loss_sum = 0.0
        step_count = 0
        for start in range(0, n, batch):
            chunk = order[start : start + batch]
            pairs = [(prepared[i].ctx, prepared[i].question) for i in chunk]
            loss, grads, diag = loss_and_grad(params, pairs)
            params, state = adam_step(params, grads, state, cfg)
            loss_sum += loss
            step_count += diag["steps"]
        mean_loss = loss_sum / step_count

        result = evaluate(score_questions(params, prepared), prepared)
        history.append(EpochStats(epoch=epoch, loss=mean_loss, r1=result.r1, r3=result.r3))

        if cfg.select_on_test:
            key = evaluate(score_questions(params, test_prepared), test_prepared).r1
            better = key > best_key
        else:
            key = mean_loss
            better = key < best_key
        if better:
            best_key = key
            best_params = {k: v.copy() for k, v in params.items()}
    return best_params, history


# -- checkpoints ---------------------------------------------------------


def save_checkpoint(
    path: str | Path, params: Params, scorer_cfg: ScorerConfig, agg_cfg: AggregationConfig
) -> None:
    """FEATPACK of f32 parameters plus a <path>.json config sidecar."""
    path = Path(path)
    write_featpack({k: v.astype(np.float32) for k, v in params.items()}, path)
    sidecar = {
        "scorer": {
            "d_t": scorer_cfg.d_t,
            "d_v": scorer_cfg.d_v,
            "d_hidden": scorer_cfg.d_hidden,
            "d_gru": scorer_cfg.d_gru,
            "seed": scorer_cfg.seed,
        },
        "aggregation": {
            "temperature": agg_cfg.temperature,
            "use_hoi": agg_cfg.use_hoi,
            "use_global": agg_cfg.use_global,
        },
    }
    Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2) + "\n")


def load_checkpoint(path: str | Path) -> tuple[Params, ScorerConfig, AggregationConfig]:
    path = Path(path)
    sidecar = json.loads(Path(str(path) + ".json").read_text())
    scorer_cfg = ScorerConfig(**sidecar["scorer"])
    agg_cfg = AggregationConfig(**sidecar["aggregation"])
    pack = read_featpack(path)
    expected = param_shapes(scorer_cfg)
    params: Params = {}
    for name, shape in expected.items():
        if name not in pack:
            raise ValidationError(f"checkpoint {path}: missing parameter {name}")
        if pack[name].shape != shape:
            raise ValidationError(
                f"checkpoint {path}: parameter {name} has shape {pack[name].shape}, expected {shape}"
            )
        params[name] = pack[name].astype(np.float64)
    return params, scorer_cfg, agg_cfg


# -- gradient checking ---------------------------------------------------


@dataclass
class GradCheckReport:
    passed: bool
    max_rel_error: float
    worst_param: str
    per_param: dict[str, float] = field(default_factory=dict)


def _random_fixture(
    scorer_cfg: ScorerConfig, rng: np.random.Generator, n_steps: int, candidates: tuple[int, ...]
) -> tuple[FusedContext, QuestionRecord]:
    def vec(d):
        return rng.standard_normal(d).astype(np.float32)

    steps = []
    for s in range(n_steps):
        n_c = candidates[s % len(candidates)]
        cands = [
            CandidateRecord(text_embedding=vec(scorer_cfg.d_t), button_embedding=vec(scorer_cfg.d_v))
            for _ in range(n_c)
        ]
        steps.append(StepRecord(candidates=cands, ground_truth_index=int(rng.integers(n_c))))
    question = QuestionRecord(
        id="gradcheck", question_tokens=["check"], question_embedding=vec(scorer_cfg.d_t), steps=steps
    )
    ctx = FusedContext(
        text=rng.standard_normal(scorer_cfg.d_t), visual=rng.standard_normal(scorer_cfg.d_v)
    )
    return ctx, question


def grad_check(
    scorer_cfg: ScorerConfig,
    tolerance: float = 1e-4,
    seed: int = 0,
    n_steps: int = 2,
    candidates: tuple[int, ...] = (3, 4),
    epsilon: float = 1e-5,
    corrupt_param: str | None = None,
) -> GradCheckReport:
    """Compare every analytic gradient entry to central finite differences.

    Relative error is |a - n| / max(|a|, |n|, 1e-6).  `corrupt_param`
    flips the sign of that parameter's largest gradient entry first (a
    self-test hook: the report must then fail naming that parameter).
    """
    rng = np.random.default_rng(seed)
    ctx, question = _random_fixture(scorer_cfg, rng, n_steps, candidates)
    params = init_params(ScorerConfig(
        d_t=scorer_cfg.d_t, d_v=scorer_cfg.d_v, d_hidden=scorer_cfg.d_hidden,
        d_gru=scorer_cfg.d_gru, seed=int(rng.integers(2**31)),
    ))
    batch = [(ctx, question)]
    _, grads, _ = loss_and_grad(params, batch)
    if corrupt_param is not None:
        flat = grads[corrupt_param].reshape(-1)
        flat[np.argmax(np.abs(flat))] *= -1.0

    per_param: dict[str, float] = {}
    worst = ("", 0.0)
    for name, theta in params.items():
        flat = theta.reshape(-1)
        analytic = grads[name].reshape(-1)
        worst_here = 0.0
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + epsilon
            lp = loss_and_grad(params, batch)[0]
            flat[i] = orig - epsilon
            lm = loss_and_grad(params, batch)[0]
            flat[i] = orig
            numeric = (lp - lm) / (2.0 * epsilon)
            rel = abs(analytic[i] - numeric) / max(abs(analytic[i]), abs(numeric), 1e-6)
            worst_here = max(worst_here, rel)
        per_param[name] = worst_here
        if worst_here > worst[1]:
            worst = (name, worst_here)
    return GradCheckReport(
        passed=worst[1] < tolerance, max_rel_error=worst[1], worst_param=worst[0], per_param=per_param
    )
