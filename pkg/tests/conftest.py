import numpy as np
import pytest

from aqtc import CandidateRecord, Dims, FunctionRecord, QuestionRecord, StepRecord, TaskManifest


def make_task(
    rng: np.random.Generator,
    n_functions: int = 2,
    n_questions: int = 1,
    n_steps: int = 1,
    n_candidates: int = 2,
    d_v: int = 4,
    d_t: int = 3,
    task_id: str = "task0",
    split: str = "train",
) -> TaskManifest:
    """Small random-but-valid task for unit tests."""
    def f32(*shape):
        return rng.standard_normal(shape).astype(np.float32)

    functions = []
    for j in range(n_functions):
        t_frames = int(rng.integers(2, 5))
        functions.append(
            FunctionRecord(
                id=f"f{j}",
                paragraph_tokens=["press", f"part{j}", f"part{j}"],
                frame_embeddings=f32(t_frames, d_v),
                hoi_states=rng.integers(-1, 2, size=t_frames).astype(np.int8),
                text_embedding=f32(d_t),
                global_embedding=f32(d_v),
            )
        )
    questions = []
    for i in range(n_questions):
        steps = []
        for _ in range(n_steps):
            cands = [
                CandidateRecord(text_embedding=f32(d_t), button_embedding=f32(d_v))
                for _ in range(n_candidates)
            ]
            steps.append(StepRecord(candidates=cands, ground_truth_index=int(rng.integers(n_candidates))))
        questions.append(
            QuestionRecord(
                id=f"{task_id}q{i}",
                question_tokens=["how", f"part{i % n_functions}"],
                question_embedding=f32(d_t),
                steps=steps,
            )
        )
    return TaskManifest(
        task_id=task_id,
        functions=functions,
        questions=questions,
        dims=Dims(d_v=d_v, d_t=d_t),
        split=split,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
