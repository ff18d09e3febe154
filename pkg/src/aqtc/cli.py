"""Command-line entry point wiring every module together.

Subcommands: validate | synth | train | eval | ablate | ensemble | report.
Exit codes: 0 success, 1 invalid input, 2 runtime failure.  Every run
writes a run.json provenance record (resolved config + input hashes)
under --out.  A JSON config file (--config) supplies defaults that
explicit flags override.  AQTC_LOG=debug|info|warn controls logging.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .aggregation import AggregationConfig
from .ensemble import EnsembleMember, EnsembleSpec, evaluate_ensemble
from .errors import AqtcError, CorruptionError, FormatError, MissingFeatureError, ValidationError
from .evaluation import evaluate_params, run_ablation
from .featstore import SynthSpec, generate_synthetic, load_manifest, save_manifest
from .pipeline import prepare_questions
from .reporting import (
    ablation_table,
    ablation_to_csv,
    history_to_csv,
    ranks_to_csv,
    svg_bar_chart,
    svg_line_chart,
)
from .scorer import ScorerConfig
from .training import TrainConfig, load_checkpoint, save_checkpoint, train

log = logging.getLogger("aqtc")

_INPUT_EXIT = 1
_RUNTIME_EXIT = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(_INPUT_EXIT)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _input_hashes(paths: list[str | Path | None]) -> dict[str, str]:
    hashes = {}
    for p in paths:
        if p is None:
            continue
        p = Path(p)
        if p.is_file():
            hashes[str(p)] = _sha256(p)
            if p.suffix == ".json" and "manifest" in p.name:
                try:
                    doc = json.loads(p.read_text())
                    for task in doc.get("tasks", []):
                        pack = p.parent / task["featpack"]
                        if pack.is_file():
                            hashes[str(pack)] = _sha256(pack)
                except (json.JSONDecodeError, KeyError, TypeError):
                    pass
    return hashes


def _write_run_record(out_dir: Path, command: str, resolved: dict, inputs: list) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    record = {
        "command": command,
        "argv": sys.argv[1:],
        "config": resolved,
        "inputs": _input_hashes(inputs),
        "versions": {"aqtc": __version__, "python": sys.version.split()[0], "numpy": np.__version__},
    }
    (out_dir / "run.json").write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")


class _Resolver:
    """Flag resolution: explicit flag > --config file entry > default."""

    def __init__(self, args: argparse.Namespace):
        self.args = vars(args)
        self.file = {}
        if self.args.get("config"):
            try:
                self.file = json.loads(Path(self.args["config"]).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ValidationError(f"cannot read config file: {exc}") from exc
            if not isinstance(self.file, dict):
                raise ValidationError("config file must hold a JSON object")
        self.resolved: dict = {}

    def get(self, key: str, default=None):
        value = self.args.get(key)
        if value is None:
            value = self.file.get(key, default)
        self.resolved[key] = value
        return value


def _agg_config(r: _Resolver) -> AggregationConfig:
    return AggregationConfig(
        temperature=float(r.get("hoi_temp", 1.0)),
        use_hoi=not bool(r.get("no_hoi", False)),
        use_global=bool(r.get("use_global", False)),
    )


def _dump_grounding(tasks, agg_cfg, path: Path) -> None:
    prepared = prepare_questions(tasks, agg_cfg)
    doc = {p.question.id: [round(float(s), 9) for s in p.grounding] for p in prepared}
    path.write_text(json.dumps(doc, indent=2) + "\n")


# -- subcommand handlers -------------------------------------------------


def _cmd_validate(r: _Resolver) -> int:
    data = r.get("data")
    jobs = int(r.get("jobs") or os.cpu_count() or 1)
    tasks = load_manifest(data, jobs=jobs)
    n_functions = sum(len(t.functions) for t in tasks)
    n_questions = sum(len(t.questions) for t in tasks)
    n_steps = sum(len(q.steps) for t in tasks for q in t.questions)
    dims = tasks[0].dims
    print(f"ok: {len(tasks)} tasks, {n_functions} functions, {n_questions} questions, {n_steps} steps")
    print(f"dims: d_v={dims.d_v} d_t={dims.d_t}; splits: "
          + ", ".join(f"{s}={sum(1 for t in tasks if t.split == s)}" for s in ("train", "test")))
    _write_run_record(Path(r.get("out", "aqtc-out")), "validate", r.resolved, [data])
    return 0


def _cmd_synth(r: _Resolver) -> int:
    out = Path(r.get("out", "aqtc-out"))
    seed = int(r.get("seed", 7))
    spec = SynthSpec(
        tasks=int(r.get("tasks", 3)),
        functions_per_task=int(r.get("functions", 5)),
        questions_per_task=int(r.get("questions", 2)),
        steps_per_question=int(r.get("steps", 3)),
        candidates_per_step=int(r.get("candidates", 4)),
        d_v=int(r.get("d_v", 16)),
        d_t=int(r.get("d_t", 16)),
    )
    tasks = generate_synthetic(seed, spec, split="train")
    test_tasks = int(r.get("test_tasks", 0))
    if test_tasks:
        test_spec = SynthSpec(
            tasks=test_tasks,
            functions_per_task=spec.functions_per_task,
            questions_per_task=spec.questions_per_task,
            steps_per_question=spec.steps_per_question,
            candidates_per_step=spec.candidates_per_step,
            d_v=spec.d_v,
            d_t=spec.d_t,
        )
        tasks += generate_synthetic(seed + 1_000_003, test_spec, split="test", task_prefix="test")
    manifest = save_manifest(tasks, out)
    _write_run_record(out, "synth", r.resolved, [])
    print(f"wrote {manifest} ({len(tasks)} tasks)")
    return 0


def _cmd_train(r: _Resolver) -> int:
    data = r.get("data")
    out = Path(r.get("out", "aqtc-out"))
    jobs = int(r.get("jobs") or os.cpu_count() or 1)
    seed = int(r.get("seed", 0))
    tasks = load_manifest(data, jobs=jobs)
    dims = tasks[0].dims

    batch = r.get("batch_questions")
    batch = None if batch in ("full", None) else int(batch)
    cfg = TrainConfig(
        learning_rate=float(r.get("lr", 1e-4)),
        epochs=int(r.get("epochs", 100)),
        seed=seed,
        shuffle=not bool(r.get("no_shuffle", False)),
        batch_questions=batch,
        select_on_test=bool(r.get("select_on_test", False)),
    )
    scorer_cfg = ScorerConfig(
        d_t=dims.d_t,
        d_v=dims.d_v,
        d_hidden=int(r.get("d_hidden", 128)),
        d_gru=int(r.get("d_gru", 128)),
        seed=seed,
    )
    agg_cfg = _agg_config(r)

    out.mkdir(parents=True, exist_ok=True)
    _write_run_record(out, "train", r.resolved, [data])
    params, history = train(tasks, cfg, scorer_cfg, agg_cfg)
    save_checkpoint(out / "best.fp", params, scorer_cfg, agg_cfg)
    history_to_csv(history, out / "history.csv")
    if r.get("dump_grounding"):
        _dump_grounding(tasks, agg_cfg, out / "grounding.json")
    last = history[-1]
    print(f"trained {cfg.epochs} epochs: loss={last.loss:.6f} R@1={last.r1:.3f} R@3={last.r3:.3f}")
    print(f"checkpoint: {out / 'best.fp'}")
    return 0


def _cmd_eval(r: _Resolver) -> int:
    data = r.get("data")
    ckpt = r.get("ckpt")
    split = r.get("split")
    jobs = int(r.get("jobs") or os.cpu_count() or 1)
    tasks = load_manifest(data, jobs=jobs)
    params, scorer_cfg, agg_cfg = load_checkpoint(ckpt)
    dims = tasks[0].dims
    if (scorer_cfg.d_t, scorer_cfg.d_v) != (dims.d_t, dims.d_v):
        raise ValidationError(
            f"checkpoint dims ({scorer_cfg.d_t},{scorer_cfg.d_v}) do not match dataset ({dims.d_t},{dims.d_v})"
        )
    result = evaluate_params(params, tasks, agg_cfg, split=split)
    print(f"R@1={result.r1:.3f} R@3={result.r3:.3f} ({len(result.per_step)} steps)")
    out = Path(r.get("out", "aqtc-out"))
    out.mkdir(parents=True, exist_ok=True)
    _write_run_record(out, "eval", r.resolved, [data, ckpt])
    (out / "metrics.json").write_text(
        json.dumps({"r1": result.r1, "r3": result.r3, "steps": len(result.per_step)}, indent=2) + "\n"
    )
    if r.get("dump_grounding"):
        _dump_grounding(tasks, agg_cfg, out / "grounding.json")
    dump_ranks = r.get("dump_ranks")
    if dump_ranks:
        ranks_to_csv(result, dump_ranks)
    return 0


def _cmd_ablate(r: _Resolver) -> int:
    data = r.get("data")
    grid_path = r.get("grid")
    out_arg = Path(r.get("out", "aqtc-out"))
    if out_arg.suffix == ".csv":  # `--out table.csv` names the table directly
        out, table_path = out_arg.parent if str(out_arg.parent) != "" else Path("."), out_arg
    else:
        out, table_path = out_arg, out_arg / "table.csv"
    jobs = int(r.get("jobs") or os.cpu_count() or 1)
    try:
        grid = json.loads(Path(grid_path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read grid file: {exc}") from exc
    if not isinstance(grid, list) or not all(isinstance(p, dict) for p in grid):
        raise ValidationError("grid file must hold a JSON list of objects")

    tasks = load_manifest(data, jobs=jobs)
    dims = tasks[0].dims
    seed = int(r.get("seed", 0))
    cfg = TrainConfig(
        learning_rate=float(r.get("lr", 1e-4)),
        epochs=int(r.get("epochs", 100)),
        seed=seed,
        batch_questions=None if r.get("batch_questions") in ("full", None) else int(r.get("batch_questions")),
    )
    scorer_cfg = ScorerConfig(
        d_t=dims.d_t, d_v=dims.d_v,
        d_hidden=int(r.get("d_hidden", 128)), d_gru=int(r.get("d_gru", 128)), seed=seed,
    )
    rows = run_ablation(tasks, grid, cfg, scorer_cfg)
    out.mkdir(parents=True, exist_ok=True)
    _write_run_record(out, "ablate", r.resolved, [data, grid_path])
    ablation_to_csv(rows, table_path)
    print(ablation_table(rows))
    print(f"table: {table_path}")
    return 0


def _cmd_ensemble(r: _Resolver) -> int:
    data = r.get("data")
    spec_path = r.get("spec")
    split = r.get("split")
    jobs = int(r.get("jobs") or os.cpu_count() or 1)
    try:
        doc = json.loads(Path(spec_path).read_text())
        members = [
            EnsembleMember(checkpoint_path=m["checkpoint"], weight=float(m.get("weight", 1.0)))
            for m in doc["members"]
        ]
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ValidationError(f"cannot read ensemble spec: {exc}") from exc
    spec = EnsembleSpec(
        members=members,
        normalize=bool(doc.get("normalize", True)),
        fuse_logits=bool(r.get("fuse_logits", False) or doc.get("fuse_logits", False)),
    )
    tasks = load_manifest(data, jobs=jobs)
    result = evaluate_ensemble(spec, tasks, split=split)
    for member, solo in zip(spec.members, result.members):
        print(f"member {member.checkpoint_path}: R@1={solo.r1:.3f} R@3={solo.r3:.3f}")
    print(f"ensemble: R@1={result.ensemble.r1:.3f} R@3={result.ensemble.r3:.3f}")
    out = Path(r.get("out", "aqtc-out"))
    out.mkdir(parents=True, exist_ok=True)
    _write_run_record(out, "ensemble", r.resolved, [data, spec_path])
    (out / "metrics.json").write_text(
        json.dumps(
            {
                "ensemble": {"r1": result.ensemble.r1, "r3": result.ensemble.r3},
                "members": [{"r1": m.r1, "r3": m.r3} for m in result.members],
            },
            indent=2,
        )
        + "\n"
    )
    return 0


def _cmd_report(r: _Resolver) -> int:
    out = Path(r.get("out", "aqtc-out"))
    out.mkdir(parents=True, exist_ok=True)
    made = []
    history_csv = r.get("history")
    if history_csv:
        import csv as _csv

        with open(history_csv) as fh:
            rows = list(_csv.DictReader(fh))
        if not rows:
            raise ValidationError(f"{history_csv}: empty history")
        epochs = [float(row["epoch"]) for row in rows]
        series = {k: [float(row[k]) for row in rows] for k in ("loss", "r1", "r3")}
        svg_line_chart(epochs, series, out / "history.svg", title="training history")
        made.append(out / "history.svg")
    ablation_csv = r.get("ablation")
    if ablation_csv:
        import csv as _csv

        with open(ablation_csv) as fh:
            rows = list(_csv.DictReader(fh))
        if not rows:
            raise ValidationError(f"{ablation_csv}: empty ablation table")
        labels = [f"hoi={row['use_hoi']} glob={row['use_global']} t={row['temperature']}" for row in rows]
        series = {"R@1": [float(row["r1"]) for row in rows], "R@3": [float(row["r3"]) for row in rows]}
        svg_bar_chart(labels, series, out / "ablation.svg", title="ablation")
        made.append(out / "ablation.svg")
    if not made:
        raise ValidationError("report: pass --history and/or --ablation")
    _write_run_record(out, "report", r.resolved, [history_csv, ablation_csv])
    for p in made:
        print(f"wrote {p}")
    return 0


# -- parser ---------------------------------------------------------------


def _build_parser() -> _Parser:
    parser = _Parser(prog="aqtc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.add_argument("--config", help="JSON file of flag defaults")
        p.add_argument("--out", help="output directory")
        p.add_argument("--jobs", type=int, help="parallel featpack loads")
        return p

    p = add("validate", help="load and validate a dataset")
    p.add_argument("--data", required=True)

    p = add("synth", help="generate a deterministic synthetic dataset")
    p.add_argument("--seed", type=int)
    p.add_argument("--tasks", type=int)
    p.add_argument("--functions", type=int)
    p.add_argument("--questions", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--candidates", type=int)
    p.add_argument("--d-v", dest="d_v", type=int)
    p.add_argument("--d-t", dest="d_t", type=int)
    p.add_argument("--test-tasks", dest="test_tasks", type=int)

    p = add("train", help="train the scorer")
    p.add_argument("--data", required=True)
    p.add_argument("--lr", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--batch-questions", dest="batch_questions")
    p.add_argument("--no-shuffle", dest="no_shuffle", action="store_const", const=True)
    p.add_argument("--d-hidden", dest="d_hidden", type=int)
    p.add_argument("--d-gru", dest="d_gru", type=int)
    p.add_argument("--hoi-temp", dest="hoi_temp", type=float)
    p.add_argument("--no-hoi", dest="no_hoi", action="store_const", const=True)
    p.add_argument("--use-global", dest="use_global", action="store_const", const=True)
    p.add_argument("--select-on-test", dest="select_on_test", action="store_const", const=True)
    p.add_argument("--dump-grounding", dest="dump_grounding", action="store_const", const=True)

    p = add("eval", help="evaluate a checkpoint")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", choices=["train", "test"])
    p.add_argument("--dump-ranks", dest="dump_ranks")
    p.add_argument("--dump-grounding", dest="dump_grounding", action="store_const", const=True)

    p = add("ablate", help="train + evaluate over a config grid")
    p.add_argument("--data", required=True)
    p.add_argument("--grid", required=True)
    p.add_argument("--lr", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--batch-questions", dest="batch_questions")
    p.add_argument("--d-hidden", dest="d_hidden", type=int)
    p.add_argument("--d-gru", dest="d_gru", type=int)

    p = add("ensemble", help="fuse and evaluate multiple checkpoints")
    p.add_argument("--spec", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", choices=["train", "test"])
    p.add_argument("--fuse-logits", dest="fuse_logits", action="store_const", const=True)

    p = add("report", help="render CSV outputs to SVG")
    p.add_argument("--history")
    p.add_argument("--ablation")
    return parser


_HANDLERS = {
    "validate": _cmd_validate,
    "synth": _cmd_synth,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "ablate": _cmd_ablate,
    "ensemble": _cmd_ensemble,
    "report": _cmd_report,
}


def run(argv: list[str]) -> int:
    level = {"debug": logging.DEBUG, "info": logging.INFO, "warn": logging.WARNING}.get(
        os.environ.get("AQTC_LOG", "warn").lower(), logging.WARNING
    )
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _HANDLERS[args.command](_Resolver(args))
    except (ValidationError, FormatError, MissingFeatureError, CorruptionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _INPUT_EXIT
    except AqtcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _RUNTIME_EXIT
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        log.exception("unhandled failure")
        print(f"internal error: {exc}", file=sys.stderr)
        return _RUNTIME_EXIT


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
