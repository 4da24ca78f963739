"""Command-line entry points: generate, train, evaluate, classify.

Every subcommand is deterministic given its seed and configuration, and
every artifact directory carries a run.json with the tool version, seed,
and configuration hash so outputs can be reproduced and audited.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import shutil
import sys

import numpy as np

from . import __version__
from .errors import DiffsentryError
from .evaluation import time_report
from .features import Task, extract
from .pipeline import (
    StreamingClassifier,
    TrainConfig,
    decide,
    detect_noise_study,
    load_corpus_waveforms,
    load_pipeline,
    save_pipeline,
    train_pipeline,
)
from .resampling import ResamplePlan, Strategy
from .sampling import EventKind, SamplingSpec, Waveform, read_waveform_csv
from .wavegen.corpus import generate_corpus, load_manifest, reference_plan
from .ensembles import GBC_GRID_FULL, GBC_GRID_SMALL
from .ensembles.model import predict

_DEFAULT_THRESHOLDS = {
    "DetectFault": 0.95,
    "LocateUnit": 0.90,
    "IdentifyDisturbance": 0.90,
}

_RESAMPLE_CHOICES = {
    "none": None,
    "smote": Strategy.SMOTE_ONLY,
    "nearmiss": Strategy.NEARMISS_ONLY,
    "combined": Strategy.COMBINED,
}


def _config_hash(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _write_run_stamp(out_dir: str, seed: int, config: dict) -> None:
    stamp = {
        "tool_version": __version__,
        "seed": seed,
        "config": config,
        "config_hash": _config_hash(config),
    }
    with open(os.path.join(out_dir, "run.json"), "w", newline="\n") as fh:
        json.dump(stamp, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_json_config(path):
    if not path:
        return {}
    with open(path) as fh:
        return json.load(fh)


class _Cleanup:
    """Remove paths this command created if it fails partway."""

    def __init__(self):
        self.paths = []

    def track_dir(self, path) -> None:
        if not os.path.exists(path):
            self.paths.append(path)
            os.makedirs(path)

    def track_file(self, path) -> None:
        if not os.path.exists(path):
            self.paths.append(path)

    def discard(self) -> None:
        for p in reversed(self.paths):
            if os.path.isdir(p):
                shutil.rmtree(p, ignore_errors=True)
            elif os.path.exists(p):
                os.remove(p)


def cmd_generate(args) -> int:
    cleanup = _Cleanup()
    config = {
        "cases_per_class": args.cases_per_class,
        "fault_cases": args.fault_cases,
    }
    try:
        cleanup.track_dir(args.out)
        os.makedirs(args.out, exist_ok=True)
        plan = reference_plan(
            cases_per_class=args.cases_per_class, fault_cases=args.fault_cases
        )
        manifest = generate_corpus(plan, args.seed, args.out)
        _write_run_stamp(args.out, args.seed, config)
    except Exception:
        cleanup.discard()
        raise
    counts = {}
    for row in manifest:
        counts[label_class_name_from_row(row)] = (
            counts.get(label_class_name_from_row(row), 0) + 1
        )
    print(f"corpus written to {args.out} ({len(manifest)} waveforms)")
    print(f"{'class':<28}{'cases':>8}")
    for name in sorted(counts):
        print(f"{name:<28}{counts[name]:>8}")
    return 0


def label_class_name_from_row(row: dict) -> str:
    if row["kind"] == EventKind.INTERNAL_FAULT.value:
        return EventKind.INTERNAL_FAULT.value
    return row["disturbance_type"]


def cmd_train(args) -> int:
    manifest = load_manifest(args.corpus)
    strategy = _RESAMPLE_CHOICES[args.resample]
    plan = ResamplePlan(strategy=strategy) if strategy else None
    grid = dict(GBC_GRID_FULL if args.grid == "paper" else GBC_GRID_SMALL)
    overrides = _load_json_config(args.config)
    grid.update(overrides.get("grid", {}))
    config = TrainConfig(
        grid=grid,
        cv_k=args.cv,
        seed=args.seed,
        resample=plan,
    )
    model = train_pipeline(args.corpus, manifest, config)
    model.metadata["tool_version"] = __version__
    model.metadata["config_hash"] = _config_hash(
        {"grid": grid, "cv": args.cv, "resample": args.resample}
    )
    cleanup = _Cleanup()
    try:
        cleanup.track_file(args.out)
        save_pipeline(model, args.out)
    except Exception:
        cleanup.discard()
        raise
    print(f"pipeline model written to {args.out}")
    for task_name, table in model.metadata["cv_tables"].items():
        print(f"\n[{task_name}] best {table['best_config']} "
              f"cv balanced accuracy {table['cv_balanced_accuracy']:.4f}")
        for rowt in table["table"]:
            cfg = rowt["config"]
            print(
                f"  est={cfg['n_estimators']:<6} depth={cfg['max_depth']:<3} "
                f"lr={cfg['learning_rate']:<5} -> "
                f"{rowt['mean_balanced_accuracy']:.4f}"
            )
    print("\nholdout metrics:")
    for task_name, metrics in model.metadata["holdout_metrics"].items():
        ba = metrics.get("balanced_accuracy")
        ba_s = f"{ba:.4f}" if ba is not None else "n/a"
        print(f"  {task_name:<22} n={metrics['n']:<5} "
              f"acc={metrics['accuracy']:.4f} bal_acc={ba_s}")
    return 0


def _holdout_records(corpus_dir, manifest, model):
    holdout_files = set(model.metadata.get("holdout_files", []))
    rows = [r for r in manifest if r["file"] in holdout_files]
    if not rows:
        raise DiffsentryError(
            "model metadata lists no holdout files present in this corpus; "
            "evaluate with the corpus the model was trained on"
        )
    return load_corpus_waveforms(corpus_dir, rows)


def _row_event_label(row):
    from .sampling import EventLabel

    return EventLabel.from_dict(row)


def cmd_evaluate(args) -> int:
    sampling = SamplingSpec()
    manifest = load_manifest(args.corpus)
    model = load_pipeline(args.model)
    records = _holdout_records(args.corpus, manifest, model)
    thresholds = dict(_DEFAULT_THRESHOLDS)
    thresholds.update(_load_json_config(args.config).get("thresholds", {}))

    snr_list = []
    for token in (args.snr.split(",") if args.snr else []):
        token = token.strip()
        snr_list.append(math.inf if token in ("inf", "Inf", "INF") else float(token))

    report = {
        "tool_version": __version__,
        "seed": args.seed,
        "model": os.path.basename(args.model),
        "holdout_metrics": model.metadata.get("holdout_metrics", {}),
        "thresholds": thresholds,
    }

    noise_rows = []
    if snr_list:
        holdout_files = set(model.metadata.get("holdout_files", []))
        all_records = load_corpus_waveforms(args.corpus, manifest)
        train_files = [
            r["file"] for r, _ in all_records if r["file"] not in holdout_files
        ]
        noise_rows = detect_noise_study(
            all_records, train_files, snr_list, seed=args.seed,
            detector_cfg=model.detector_cfg, sampling=sampling,
        )
    report["noise_sweep"] = noise_rows

    failures = []
    for task_name, threshold in thresholds.items():
        metrics = report["holdout_metrics"].get(task_name)
        score = metrics.get("balanced_accuracy") if metrics else None
        ok = score is not None and score >= threshold
        if not ok:
            failures.append(f"{task_name}: {score} < {threshold}")
    report["passed"] = not failures
    report["failures"] = failures

    cleanup = _Cleanup()
    try:
        cleanup.track_dir(args.out)
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "report.json"), "w", newline="\n") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
        _write_predictions_csv(
            os.path.join(args.out, "predictions.csv"), records, model
        )
        _write_run_stamp(
            args.out, args.seed,
            {"model": os.path.basename(args.model), "snr": args.snr,
             "thresholds": thresholds},
        )
        if args.timing:
            timing = _measure_timing(records, model, sampling)
            with open(os.path.join(args.out, "timing.json"), "w", newline="\n") as fh:
                json.dump(timing, fh, indent=2, sort_keys=True)
                fh.write("\n")
            print("timing (median seconds per stage):")
            for stage, t in timing.items():
                print(f"  {stage:<24} {t['median_s']:.6f}")
    except Exception:
        cleanup.discard()
        raise

    print(f"evaluation report written to {args.out}")
    for task_name, metrics in report["holdout_metrics"].items():
        ba = metrics.get("balanced_accuracy")
        ba_s = f"{ba:.4f}" if ba is not None else "n/a"
        print(f"  {task_name:<22} bal_acc={ba_s} acc={metrics['accuracy']:.4f}")
    for rowns in noise_rows:
        print(
            f"  snr={rowns['snr_db']!s:<6} detect_acc={rowns['accuracy']:.4f} "
            f"fault_recall={rowns['fault_recall']:.4f}"
        )
    if failures:
        print("FAILED thresholds: " + "; ".join(failures))
        return 1
    print("all thresholds met")
    return 0


def _write_predictions_csv(path, records, model) -> None:
    """Per-instance holdout decisions for audit (deterministic)."""
    with open(path, "w", newline="\n") as fh:
        fh.write("file,kind,truth,verdict,fault_unit,fault_type,disturbance_type\n")
        for row, samples in records:
            decision = decide(samples, model)
            truth = (
                row["fault_type"]
                if row["kind"] == EventKind.INTERNAL_FAULT.value
                else row["disturbance_type"]
            )
            fh.write(
                f"{row['file']},{row['kind']},{truth},{decision.verdict},"
                f"{decision.fault_unit or ''},{decision.fault_type or ''},"
                f"{decision.disturbance_type or ''}\n"
            )


def _measure_timing(records, model, sampling) -> dict:
    row, samples = records[0]
    wave = Waveform(
        spec=sampling, samples=samples,
        label=_row_event_label(row), inception_index=row["inception_index"],
    )
    from .detector import detect as _detect

    event = _detect(wave, model.detector_cfg)
    stages = {"decide_one": lambda: decide(wave, model)}
    if event.triggered:
        vec = extract(event.detect_window, Task.DETECT_FAULT, sampling)
        batch = np.vstack([vec.values] * 64)
        stages["feature_extraction"] = lambda: extract(
            event.detect_window, Task.DETECT_FAULT, sampling
        )
        stages["predict_one"] = lambda: predict(
            model.slots[Task.DETECT_FAULT], vec
        )
        stages["predict_all"] = lambda: model.slots[
            Task.DETECT_FAULT
        ].predict_proba(batch)
    return time_report(stages, repeats=10)


def cmd_classify(args) -> int:
    model = load_pipeline(args.model)
    sampling = SamplingSpec()
    sink = open(args.out, "w", newline="\n") if args.out else sys.stdout
    try:
        if args.stdin:
            classifier = StreamingClassifier(model, sampling)
            for line in sys.stdin:
                line = line.strip()
                if not line or line.startswith("t"):
                    continue
                parts = line.split(",")
                sample = [float(parts[1]), float(parts[2]), float(parts[3])]
                for rec in classifier.push(sample):
                    sink.write(json.dumps(rec, sort_keys=True) + "\n")
        else:
            for path in args.inputs:
                samples = read_waveform_csv(path)
                decision = decide(samples, model)
                rec = decision.to_dict()
                rec["file"] = os.path.basename(path)
                sink.write(json.dumps(rec, sort_keys=True) + "\n")
    finally:
        if args.out:
            sink.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diffsentry",
        description="Transformer transient synthesis, detection, and classification",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a seeded synthetic corpus")
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--cases-per-class", type=int, default=120)
    g.add_argument("--fault-cases", type=int, default=468)
    g.set_defaults(fn=cmd_generate)

    t = sub.add_parser("train", help="train the six-stage pipeline on a corpus")
    t.add_argument("--corpus", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--grid", choices=("small", "paper"), default="small")
    t.add_argument("--resample", choices=tuple(_RESAMPLE_CHOICES), default="none")
    t.add_argument("--cv", type=int, default=3)
    t.add_argument("--config", help="JSON file with grid overrides")
    t.set_defaults(fn=cmd_train)

    e = sub.add_parser("evaluate", help="holdout metrics, noise sweep, timing")
    e.add_argument("--corpus", required=True)
    e.add_argument("--model", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--snr", default="", help="comma list, e.g. inf,30,10")
    e.add_argument("--config", help="JSON file with threshold overrides")
    e.add_argument("--timing", action="store_true",
                   help="also measure and write timing.json (non-deterministic)")
    e.set_defaults(fn=cmd_evaluate)

    c = sub.add_parser("classify", help="decide waveform CSVs or a stdin stream")
    c.add_argument("--model", required=True)
    c.add_argument("--out")
    c.add_argument("--stdin", action="store_true",
                   help="stream t,ia,ib,ic rows from standard input")
    c.add_argument("inputs", nargs="*", help="waveform CSV files")
    c.set_defaults(fn=cmd_classify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except DiffsentryError as exc:
        print(f"error [{args.command}]: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error [{args.command}]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
