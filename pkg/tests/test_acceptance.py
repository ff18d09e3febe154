"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s`.  Criterion 9 (the
encoder adapter contract) lives in the adapter package's own test suite
under adapter/; criteria 1-8 here run with no adapter built.
"""

import time

import numpy as np
import pytest

from aqtc import (
    AggregationConfig,
    CorruptionError,
    EnsembleMember,
    EnsembleSpec,
    FormatError,
    ScorerConfig,
    SynthSpec,
    TrainConfig,
    combine,
    evaluate,
    evaluate_ensemble,
    fit_tfidf,
    generate_synthetic,
    grad_check,
    hoi_weights,
    aggregate_clip,
    prepare_questions,
    rank_of_truth,
    read_featpack,
    save_checkpoint,
    save_manifest,
    score_question,
    train,
    write_featpack,
)
from aqtc.cli import run
from aqtc.evaluation import evaluate_params
from aqtc.scorer import ScoreTensor

from oracles import naive_tfidf_scores, rank_by_sort


def _ok(n, msg):
    print(f"\nACCEPTANCE {n}: PASS - {msg}")


def test_criterion_1_gradient_correctness():
    """Analytic gradients match central finite differences (eps=1e-5, f64) < 1e-4."""
    t0 = time.monotonic()
    worst = 0.0
    for seed, d_gru in ((0, 4), (1, 8), (2, 8)):
        cfg = ScorerConfig(d_t=3, d_v=3, d_hidden=6, d_gru=d_gru, seed=seed)
        report = grad_check(cfg, tolerance=1e-4, seed=seed, n_steps=2, candidates=(3, 4), epsilon=1e-5)
        assert report.passed, f"seed {seed}: {report.max_rel_error:.2e} at {report.worst_param}"
        worst = max(worst, report.max_rel_error)
    elapsed = time.monotonic() - t0
    assert elapsed < 30.0
    _ok(1, f"3 configs, max rel error {worst:.2e} < 1e-4 in {elapsed:.1f}s")


def test_criterion_2_overfit(tmp_path):
    """train --epochs 200 --lr 1e-4 on the seed-7 fixture: R@1 = 1.0, loss < 0.05."""
    spec = SynthSpec(tasks=3, functions_per_task=5, questions_per_task=2,
                     steps_per_question=3, candidates_per_step=4, d_v=16, d_t=16)
    data = tmp_path / "d"
    save_manifest(generate_synthetic(7, spec), data)
    out = tmp_path / "run1"
    t0 = time.monotonic()
    code = run([
        "train", "--data", str(data / "manifest.json"),
        "--epochs", "200", "--lr", "1e-4", "--seed", "1", "--out", str(out),
    ])
    elapsed = time.monotonic() - t0
    assert code == 0
    import csv

    with open(out / "history.csv") as fh:
        last = list(csv.DictReader(fh))[-1]
    assert float(last["r1"]) == 1.0
    assert float(last["loss"]) < 0.05
    assert elapsed < 120.0

    result = run(["eval", "--ckpt", str(out / "best.fp"), "--data", str(data / "manifest.json")])
    assert result == 0
    _ok(2, f"R@1=1.000, final loss {float(last['loss']):.4f} < 0.05 in {elapsed:.0f}s")


def test_criterion_3_tfidf_oracle_equivalence():
    """Engine scores agree with the naive implementation to <= 1e-9 on 100 corpora."""
    words = [f"w{i}" for i in range(12)]
    rng = np.random.default_rng(303)
    worst = 0.0
    for _ in range(100):
        corpus = [
            [words[int(k)] for k in rng.integers(0, len(words), size=int(rng.integers(0, 31)))]
            for _ in range(int(rng.integers(1, 11)))
        ]
        question = [words[int(k)] for k in rng.integers(0, len(words), size=int(rng.integers(0, 10)))]
        got = score_question(fit_tfidf(corpus), question)
        want = np.array(naive_tfidf_scores(corpus, question))
        worst = max(worst, float(np.abs(got - want).max()) if len(got) else 0.0)
    assert worst <= 1e-9
    _ok(3, f"100 random corpora, max |delta| = {worst:.2e} <= 1e-9")


def test_criterion_4_aggregation_invariants():
    """Simplex, HOI monotonicity, mean-pool equality, high-temperature limit."""
    rng = np.random.default_rng(404)
    for _ in range(1000):
        t_frames = int(rng.integers(1, 33))
        states = rng.integers(-1, 2, size=t_frames).astype(np.int8)
        tau = float(np.exp(rng.uniform(np.log(0.05), np.log(50.0))))
        w = hoi_weights(states, tau)
        assert abs(w.sum() - 1.0) < 1e-9
        assert (w > 0).all()
        order = np.argsort(states, kind="stable")
        sorted_w = w[order]
        assert (np.diff(sorted_w) >= -1e-15).all()  # weight never drops as state rises
        for s in (-1, 0, 1):
            mask = states == s
            if mask.sum() > 1:
                assert np.ptp(w[mask]) < 1e-15

        frames = rng.standard_normal((t_frames, 6))
        uniform_states = np.full(t_frames, int(rng.integers(-1, 2)), dtype=np.int8)
        pooled = aggregate_clip(frames, uniform_states, AggregationConfig(temperature=tau))
        assert np.abs(pooled - frames.mean(axis=0)).max() <= 1e-12

        w_hot = hoi_weights(states, 1e6)
        assert np.abs(w_hot - 1.0 / t_frames).max() < 1e-5
    _ok(4, "1000 random state vectors: simplex, monotone, mean-pool, tau->inf limit")


def test_criterion_5_metric_oracle_equivalence():
    """rank/recall match a sort-based oracle exactly, ties included."""
    rng = np.random.default_rng(505)
    for _ in range(100):
        n_questions = int(rng.integers(1, 6))
        step_scores = []
        for _ in range(n_questions):
            n = int(rng.integers(2, 7))
            step_scores.append(rng.integers(0, 5, size=n) / 5.0)  # coarse grid forces ties
        gts = [int(rng.integers(len(s))) for s in step_scores]
        ranks = [rank_of_truth(s, g) for s, g in zip(step_scores, gts)]
        oracle = [rank_by_sort(list(s), g) for s, g in zip(step_scores, gts)]
        assert ranks == oracle
        r1 = sum(r <= 1 for r in ranks) / len(ranks)
        r3 = sum(r <= 3 for r in ranks) / len(ranks)
        assert r1 <= r3
    _ok(5, "100 random fixtures: ranks match sort oracle exactly, R@1 <= R@3")


def test_criterion_6_ablation_directionality():
    """HOI pooling beats mean pooling on held-out tasks (mean over 5 seeds)."""
    spec = SynthSpec(tasks=6, functions_per_task=5, questions_per_task=5,
                     steps_per_question=2, candidates_per_step=4, d_v=12, d_t=12)
    test_spec = SynthSpec(tasks=3, functions_per_task=5, questions_per_task=5,
                          steps_per_question=2, candidates_per_step=4, d_v=12, d_t=12)
    r1 = {True: [], False: []}
    for seed in range(5):
        tasks = generate_synthetic(100 + seed, spec) + generate_synthetic(
            1_000_100 + seed, test_spec, split="test", task_prefix="test"
        )
        scorer_cfg = ScorerConfig(d_t=12, d_v=12, d_hidden=96, d_gru=64, seed=seed)
        cfg = TrainConfig(learning_rate=1e-3, epochs=150, seed=seed, batch_questions=3)
        for use_hoi in (True, False):
            agg = AggregationConfig(use_hoi=use_hoi)
            params, _ = train(tasks, cfg, scorer_cfg, agg)
            r1[use_hoi].append(evaluate_params(params, tasks, agg, split="test").r1)
    mean_hoi, mean_no = float(np.mean(r1[True])), float(np.mean(r1[False]))
    assert mean_hoi > mean_no, f"hoi {r1[True]} vs mean-pool {r1[False]}"
    _ok(6, f"test R@1 hoi={mean_hoi:.3f} > mean-pool={mean_no:.3f} over 5 seeds")


def test_criterion_7_ensemble_identities(tmp_path):
    """Single/duplicated member == solo; simplex; weight-rescale invariance."""
    spec = SynthSpec(tasks=2, functions_per_task=3, questions_per_task=2,
                     steps_per_question=2, candidates_per_step=3, d_v=8, d_t=8)
    tasks = generate_synthetic(77, spec)
    scorer_cfg = ScorerConfig(d_t=8, d_v=8, d_hidden=16, d_gru=8, seed=0)
    agg = AggregationConfig()
    params, _ = train(tasks, TrainConfig(epochs=8, seed=0, learning_rate=1e-3), scorer_cfg, agg)
    ckpt = tmp_path / "m.fp"
    save_checkpoint(ckpt, params, scorer_cfg, agg)

    from aqtc import score_questions

    prepared = prepare_questions(tasks, agg)
    solo = evaluate(score_questions(params, prepared), prepared)

    single = evaluate_ensemble(EnsembleSpec(members=[EnsembleMember(str(ckpt))]), tasks)
    assert (single.ensemble.r1, single.ensemble.r3) == (solo.r1, solo.r3)
    assert [s.rank_of_gt for s in single.ensemble.per_step] == [s.rank_of_gt for s in solo.per_step]

    dup = evaluate_ensemble(
        EnsembleSpec(members=[EnsembleMember(str(ckpt), 2.0), EnsembleMember(str(ckpt), 1.0)]), tasks
    )
    assert [s.rank_of_gt for s in dup.ensemble.per_step] == [s.rank_of_gt for s in solo.per_step]

    rng = np.random.default_rng(7)
    tensors = []
    for m in range(3):
        steps = []
        for n in (3, 4):
            raw = rng.random(n)
            steps.append(raw / raw.sum())
        tensors.append([ScoreTensor(question_id="q", step_probs=steps)])
    w = np.array([0.5, 0.25, 0.25])
    fused = combine(tensors, w)
    for probs in fused[0].step_probs:
        assert abs(probs.sum() - 1.0) < 1e-6
    rescaled = combine(tensors, 40.0 * w)
    for a, b in zip(fused[0].step_probs, rescaled[0].step_probs):
        np.testing.assert_allclose(a, b, atol=1e-15)
    _ok(7, "identity, duplication, simplex, and rescale invariance hold")


def test_criterion_8_determinism_and_format(tmp_path):
    """Bit-identical reruns; bit-exact featpack round trip; corruption detected."""
    spec = SynthSpec(tasks=2, functions_per_task=3, questions_per_task=2,
                     steps_per_question=2, candidates_per_step=3, d_v=8, d_t=8)
    for sub in ("a", "b"):
        data = tmp_path / sub / "data"
        save_manifest(generate_synthetic(13, spec), data)
        assert run([
            "train", "--data", str(data / "manifest.json"),
            "--epochs", "6", "--seed", "3", "--out", str(tmp_path / sub / "run"),
        ]) == 0
    for rel in ("data/manifest.json", "data/task0.featpack", "run/best.fp", "run/history.csv"):
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes(), rel

    rng = np.random.default_rng(88)
    entries = {
        f"k{i}": rng.standard_normal(tuple(rng.integers(1, 4, size=rng.integers(1, 5)))).astype(np.float32)
        for i in range(20)
    }
    entries["states"] = rng.integers(-1, 2, size=9).astype(np.int8)
    pack = tmp_path / "rt.fp"
    write_featpack(entries, pack)
    back = read_featpack(pack)
    assert all(entries[k].tobytes() == back[k].tobytes() for k in entries)

    raw = bytearray(pack.read_bytes())
    detected = 0
    for pos in range(len(raw)):
        mutated = bytearray(raw)
        mutated[pos] ^= 0x5A
        pack.write_bytes(bytes(mutated))
        with pytest.raises((FormatError, CorruptionError)):
            read_featpack(pack)
        detected += 1
    assert detected == len(raw)
    _ok(8, f"bit-identical reruns; round trip exact; {detected}/{len(raw)} byte flips detected")
