"""Function-interaction centric engine for question-driven task completion."""

__version__ = "0.1.0"

from .aggregation import AggregationConfig, FusedContext, aggregate_clip, fuse_functions, hoi_weights
from .ensemble import EnsembleMember, EnsembleSpec, combine, combine_logits, evaluate_ensemble
from .errors import (
    AqtcError,
    CorruptionError,
    FormatError,
    IoError,
    MissingFeatureError,
    NumericalError,
    ValidationError,
)
from .evaluation import EvalResult, evaluate, evaluate_params, rank_of_truth, run_ablation
from .featpack import read_featpack, write_featpack
from .featstore import (
    CandidateRecord,
    Dims,
    FunctionRecord,
    QuestionRecord,
    StepRecord,
    SynthSpec,
    TaskManifest,
    generate_synthetic,
    load_manifest,
    save_manifest,
)
from .grounding import GroundingScores, TfIdfModel, fit_tfidf, score_question
from .pipeline import PreparedQuestion, prepare_questions, score_questions
from .scorer import (
    ScoreTensor,
    ScorerConfig,
    forward_question,
    fuse_candidate,
    gru_cell,
    init_params,
    loss_and_grad,
    param_shapes,
)
from .training import (
    AdamState,
    EpochStats,
    GradCheckReport,
    TrainConfig,
    adam_step,
    grad_check,
    init_adam,
    load_checkpoint,
    save_checkpoint,
    train,
)
