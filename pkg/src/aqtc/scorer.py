"""Answer scoring network: context MLP -> GRU over steps -> two-layer head.

Per step, every candidate is fused with the question context, pushed
through the MLP and one GRU transition from the shared carried state,
and scored by the head; a softmax over the step's candidates yields the
answer distribution.  The carried state follows the ground-truth
candidate under teacher forcing and the argmax candidate at inference.

Parameters are a flat dict keyed by the checkpoint names (``mlp/W1``,
``gru/W_z``, ...).  All math is float64; `loss_and_grad` returns exact
analytic gradients, verified elsewhere against finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .aggregation import FusedContext
from .errors import NumericalError, ValidationError
from .featstore import CandidateRecord, QuestionRecord

TEACHER_FORCING = "teacher_forcing"
INFERENCE = "inference"


@dataclass
class ScorerConfig:
    d_t: int
    d_v: int
    d_hidden: int = 128
    d_gru: int = 128
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("d_t", "d_v", "d_hidden", "d_gru"):
            if getattr(self, name) < 1:
                raise ValidationError(f"scorer config: {name} must be >= 1")

    @property
    def d_in(self) -> int:
        # [E_f_t | E_f_v | E_q | E_a_t | E_a_v]
        return 3 * self.d_t + 2 * self.d_v

    @property
    def d_head(self) -> int:
        return max(1, self.d_gru // 2)


def param_shapes(cfg: ScorerConfig) -> dict[str, tuple[int, ...]]:
    """Canonical parameter names and shapes; also the checkpoint key order."""
    g, h, i, p = cfg.d_gru, cfg.d_hidden, cfg.d_in, cfg.d_head
    shapes: dict[str, tuple[int, ...]] = {
        "mlp/W1": (h, i),
        "mlp/b1": (h,),
        "mlp/W2": (g, h),
        "mlp/b2": (g,),
    }
    for gate in ("z", "r", "h"):
        shapes[f"gru/W_{gate}"] = (g, g)
    for gate in ("z", "r", "h"):
        shapes[f"gru/U_{gate}"] = (g, g)
    for gate in ("z", "r", "h"):
        shapes[f"gru/b_{gate}"] = (g,)
    shapes.update({"head/V1": (p, g), "head/c1": (p,), "head/V2": (1, p), "head/c2": (1,)})
    return shapes


Params = dict[str, np.ndarray]


def init_params(cfg: ScorerConfig) -> Params:
    """Glorot-uniform matrices (a = sqrt(6/(fan_in+fan_out))), zero biases.

    Matrices are drawn in `param_shapes` order from a generator seeded
    with cfg.seed, so identical configs give identical parameters.
    """
    rng = np.random.default_rng(cfg.seed)
    params: Params = {}
    for name, shape in param_shapes(cfg).items():
        if len(shape) == 1:
            params[name] = np.zeros(shape)
        else:
            fan_out, fan_in = shape
            a = np.sqrt(6.0 / (fan_in + fan_out))
            params[name] = rng.uniform(-a, a, size=shape)
    return params


def zeros_like_params(params: Params) -> Params:
    return {k: np.zeros_like(v) for k, v in params.items()}


def fuse_candidate(ctx: FusedContext, e_q: np.ndarray, cand: CandidateRecord) -> np.ndarray:
    """Concatenate [E_f_t | E_f_v | E_q | E_a_t | E_a_v] in fixed order."""
    parts = (ctx.text, ctx.visual, e_q, cand.text_embedding, cand.button_embedding)
    if ctx.text.shape != e_q.shape or ctx.text.shape != cand.text_embedding.shape:
        raise ValidationError("fuse_candidate: text dimensions disagree")
    if ctx.visual.shape != cand.button_embedding.shape:
        raise ValidationError("fuse_candidate: visual dimensions disagree")
    return np.concatenate([np.asarray(p, dtype=np.float64) for p in parts])


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    expx = np.exp(x[~pos])
    out[~pos] = expx / (1.0 + expx)
    return out


def _softmax(logits: np.ndarray) -> np.ndarray:
    e = np.exp(logits - logits.max())
    return e / e.sum()


def gru_cell(params: Params, h: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Standard GRU transition: h' = (1-z) * h + z * h_tilde."""
    z = _sigmoid(params["gru/W_z"] @ x + params["gru/U_z"] @ h + params["gru/b_z"])
    r = _sigmoid(params["gru/W_r"] @ x + params["gru/U_r"] @ h + params["gru/b_r"])
    h_tilde = np.tanh(params["gru/W_h"] @ x + params["gru/U_h"] @ (r * h) + params["gru/b_h"])
    return (1.0 - z) * h + z * h_tilde


@dataclass
class ScoreTensor:
    question_id: str
    step_probs: list[np.ndarray]  # per step: [N_s] post-softmax
    step_logits: list[np.ndarray] = field(default_factory=list)  # pre-softmax, for logit fusion


@dataclass
class _StepCache:
    x: np.ndarray  # [N, d_in]
    a1: np.ndarray  # [N, d_hidden] pre-relu
    z1: np.ndarray  # [N, d_hidden]
    u: np.ndarray  # [N, d_gru] MLP output = GRU input
    z: np.ndarray  # [N, d_gru]
    r: np.ndarray  # [N, d_gru]
    h_tilde: np.ndarray  # [N, d_gru]
    h_prev: np.ndarray  # [d_gru] shared carried state
    h_new: np.ndarray  # [N, d_gru]
    p1: np.ndarray  # [N, d_head] pre-relu
    r1: np.ndarray  # [N, d_head]
    probs: np.ndarray  # [N]
    gt: int
    chosen: int


def forward_question(
    params: Params,
    ctx: FusedContext,
    question: QuestionRecord,
    mode: str = INFERENCE,
) -> tuple[ScoreTensor, list[_StepCache]]:
    """Score every step; returns per-step probabilities plus backprop caches.

    Carried state: ground-truth candidate's in teacher_forcing mode,
    argmax candidate's (ties to the lowest index) at inference.
    """
    if mode not in (TEACHER_FORCING, INFERENCE):
        raise ValidationError(f"unknown mode {mode!r}")
    d_gru = params["gru/b_z"].shape[0]
    h = np.zeros(d_gru)
    e_q = np.asarray(question.question_embedding, dtype=np.float64)
    tensor = ScoreTensor(question_id=question.id, step_probs=[], step_logits=[])
    caches: list[_StepCache] = []

    for step in question.steps:
        x = np.stack([fuse_candidate(ctx, e_q, cand) for cand in step.candidates])
        a1 = x @ params["mlp/W1"].T + params["mlp/b1"]
        z1 = np.maximum(a1, 0.0)
        u = z1 @ params["mlp/W2"].T + params["mlp/b2"]

        z = _sigmoid(u @ params["gru/W_z"].T + h @ params["gru/U_z"].T + params["gru/b_z"])
        r = _sigmoid(u @ params["gru/W_r"].T + h @ params["gru/U_r"].T + params["gru/b_r"])
        h_tilde = np.tanh(u @ params["gru/W_h"].T + (r * h) @ params["gru/U_h"].T + params["gru/b_h"])
        h_new = (1.0 - z) * h + z * h_tilde

        p1 = h_new @ params["head/V1"].T + params["head/c1"]
        r1 = np.maximum(p1, 0.0)
        logits = (r1 @ params["head/V2"].T).ravel() + params["head/c2"][0]
        if np.isnan(logits).any():
            raise NumericalError(f"NaN activation while scoring question {question.id}")
        probs = _softmax(logits)

        chosen = step.ground_truth_index if mode == TEACHER_FORCING else int(np.argmax(probs))
        caches.append(
            _StepCache(
                x=x, a1=a1, z1=z1, u=u, z=z, r=r, h_tilde=h_tilde, h_prev=h,
                h_new=h_new, p1=p1, r1=r1, probs=probs,
                gt=step.ground_truth_index, chosen=chosen,
            )
        )
        tensor.step_probs.append(probs)
        tensor.step_logits.append(logits)
        h = h_new[chosen]
    return tensor, caches


_LOG_CLAMP = 1e-12


def _backward_question(params: Params, caches: list[_StepCache], grads: Params) -> None:
    """Accumulate d(sum of per-step CE)/d(params) for one teacher-forced question.

    Walks the steps in reverse; `dh_carry` is the gradient flowing into
    the carried (ground-truth) state from later steps.
    """
    d_gru = params["gru/b_z"].shape[0]
    dh_carry = np.zeros(d_gru)
    for cache in reversed(caches):
        dlogits = cache.probs.copy()
        dlogits[cache.gt] -= 1.0

        # head: logits = relu(h_new V1^T + c1) V2^T + c2
        grads["head/V2"] += (dlogits @ cache.r1)[None, :]
        grads["head/c2"] += dlogits.sum()
        dr1 = np.outer(dlogits, params["head/V2"][0])
        dp1 = dr1 * (cache.p1 > 0)
        grads["head/V1"] += dp1.T @ cache.h_new
        grads["head/c1"] += dp1.sum(axis=0)
        dh_new = dp1 @ params["head/V1"]
        dh_new[cache.chosen] += dh_carry

        # gru: h_new = (1-z) h_prev + z h_tilde, with h_prev shared by all candidates
        dz = dh_new * (cache.h_tilde - cache.h_prev)
        dh_tilde = dh_new * cache.z
        dh_prev = (dh_new * (1.0 - cache.z)).sum(axis=0)

        da_h = dh_tilde * (1.0 - cache.h_tilde**2)
        grads["gru/W_h"] += da_h.T @ cache.u
        grads["gru/U_h"] += da_h.T @ (cache.r * cache.h_prev)
        grads["gru/b_h"] += da_h.sum(axis=0)
        drh = da_h @ params["gru/U_h"]
        dr = drh * cache.h_prev
        dh_prev += (drh * cache.r).sum(axis=0)

        da_r = dr * cache.r * (1.0 - cache.r)
        grads["gru/W_r"] += da_r.T @ cache.u
        grads["gru/U_r"] += np.outer(da_r.sum(axis=0), cache.h_prev)
        grads["gru/b_r"] += da_r.sum(axis=0)
        dh_prev += da_r.sum(axis=0) @ params["gru/U_r"]

        da_z = dz * cache.z * (1.0 - cache.z)
        grads["gru/W_z"] += da_z.T @ cache.u
        grads["gru/U_z"] += np.outer(da_z.sum(axis=0), cache.h_prev)
        grads["gru/b_z"] += da_z.sum(axis=0)
        dh_prev += da_z.sum(axis=0) @ params["gru/U_z"]

        du = da_h @ params["gru/W_h"] + da_r @ params["gru/W_r"] + da_z @ params["gru/W_z"]

        # mlp: u = relu(x W1^T + b1) W2^T + b2
        grads["mlp/W2"] += du.T @ cache.z1
        grads["mlp/b2"] += du.sum(axis=0)
        dz1 = du @ params["mlp/W2"]
        da1 = dz1 * (cache.a1 > 0)
        grads["mlp/W1"] += da1.T @ cache.x
        grads["mlp/b1"] += da1.sum(axis=0)

        dh_carry = dh_prev


def loss_and_grad(
    params: Params, batch: list[tuple[FusedContext, QuestionRecord]]
) -> tuple[float, Params, dict]:
    """Teacher-forced cross-entropy summed over every question and step.

    Returns (loss, gradient dict shaped like params, diagnostics).
    The log argument is clamped at 1e-12; clamped steps are counted in
    diagnostics["clamped"].
    """
    if not batch:
        raise ValidationError("loss_and_grad: empty batch")
    loss = 0.0
    n_steps = 0
    clamped = 0
    grads = zeros_like_params(params)
    for ctx, question in batch:
        tensor, caches = forward_question(params, ctx, question, mode=TEACHER_FORCING)
        for probs, cache in zip(tensor.step_probs, caches):
            p_gt = probs[cache.gt]
            if p_gt < _LOG_CLAMP:
                p_gt = _LOG_CLAMP
                clamped += 1
            loss -= np.log(p_gt)
            n_steps += 1
        _backward_question(params, caches, grads)
    return float(loss), grads, {"clamped": clamped, "steps": n_steps}
