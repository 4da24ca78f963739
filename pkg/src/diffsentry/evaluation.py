"""Metrics, stratified cross-validation, grid search, noise and timing harnesses."""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ClassTooSmall, EmptyCounts, ZeroSupportClass


@dataclass(frozen=True)
class ConfusionCounts:
    """Binary one-vs-rest counts per class, keyed by class label."""

    per_class: dict   # label -> {"tp": int, "fn": int, "fp": int, "tn": int}

    @classmethod
    def from_predictions(cls, y_true, y_pred) -> "ConfusionCounts":
        y_true = np.asarray(y_true)
        y_pred = np.asarray(y_pred)
        if y_true.shape[0] == 0:
            raise EmptyCounts("no predictions to score")
        labels = sorted(set(y_true) | set(y_pred), key=str)
        table = {}
        for lab in labels:
            tp = int(np.sum((y_true == lab) & (y_pred == lab)))
            fn = int(np.sum((y_true == lab) & (y_pred != lab)))
            fp = int(np.sum((y_true != lab) & (y_pred == lab)))
            tn = int(np.sum((y_true != lab) & (y_pred != lab)))
            table[lab] = {"tp": tp, "fn": fn, "fp": fp, "tn": tn}
        return cls(per_class=table)

    @classmethod
    def binary(cls, tp: int, fn: int, tn: int, fp: int,
               positive="positive", negative="negative") -> "ConfusionCounts":
        return cls(per_class={
            positive: {"tp": tp, "fn": fn, "fp": fp, "tn": tn},
            negative: {"tp": tn, "fn": fp, "fp": fn, "tn": tp},
        })


def balanced_accuracy(counts: ConfusionCounts) -> float:
    """Mean of per-class recalls (the binary form is the average of the
    true-positive and true-negative rates)."""
    recalls = []
    for lab, c in counts.per_class.items():
        support = c["tp"] + c["fn"]
        if support == 0:
            raise ZeroSupportClass(f"class {lab!r} has no true members")
        recalls.append(c["tp"] / support)
    return float(np.mean(recalls))


def accuracy(counts: ConfusionCounts) -> float:
    """(TP + TN) / total on the binary view; equals the multiclass fraction
    correct when counts come from predictions."""
    if not counts.per_class:
        raise EmptyCounts("no classes in the confusion counts")
    total_tp = sum(c["tp"] for c in counts.per_class.values())
    total = sum(c["tp"] + c["fn"] for c in counts.per_class.values())
    if total == 0:
        raise EmptyCounts("no samples in the confusion counts")
    return total_tp / total


def class_recall(counts: ConfusionCounts, label) -> float:
    c = counts.per_class[label]
    support = c["tp"] + c["fn"]
    if support == 0:
        raise ZeroSupportClass(f"class {label!r} has no true members")
    return c["tp"] / support


def stratified_kfold(labels, k: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """k (train, test) index splits preserving class proportions per fold.

    Folds partition the index set; each class's members are shuffled under
    the seed and dealt round-robin, so per-fold class counts differ from the
    exact proportion by at most one sample.
    """
    labels = np.asarray(labels)
    if k < 2:
        raise ValueError("k must be at least 2 (no held-out fold otherwise)")
    classes, counts = np.unique(labels, return_counts=True)
    too_small = [str(c) for c, n in zip(classes, counts) if n < k]
    if too_small:
        raise ClassTooSmall(
            f"classes {too_small} have fewer than k={k} members"
        )
    rng = np.random.default_rng(seed)
    folds = [[] for _ in range(k)]
    for cls in classes:
        idx = np.nonzero(labels == cls)[0]
        rng.shuffle(idx)
        for pos, i in enumerate(idx):
            folds[pos % k].append(int(i))
    out = []
    all_idx = np.arange(labels.shape[0])
    for f in range(k):
        test = np.sort(np.asarray(folds[f], dtype=int))
        train = np.setdiff1d(all_idx, test)
        out.append((train, test))
    return out


def train_test_split(labels, test_fraction: float, seed: int):
    """Stratified single split (train_idx, test_idx); 4:1 at 0.2."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    test_idx = []
    for cls in np.unique(labels):
        idx = np.nonzero(labels == cls)[0]
        rng.shuffle(idx)
        n_test = max(1, int(round(test_fraction * idx.shape[0])))
        test_idx.extend(idx[:n_test].tolist())
    test = np.sort(np.asarray(test_idx, dtype=int))
    train = np.setdiff1d(np.arange(labels.shape[0]), test)
    return train, test


@dataclass
class GridSearchResult:
    best_config: dict
    best_score: float
    table: list          # [{"config": dict, "mean_balanced_accuracy": float}]
    model: object = None


def _tie_key(config: dict, score: float):
    # canonical argmax: higher score, then fewer estimators, shallower
    # trees, larger learning rate, so grid order cannot matter
    return (
        -score,
        config.get("n_estimators", 0),
        config.get("max_depth") if config.get("max_depth") is not None else float("inf"),
        -config.get("learning_rate", 0.0),
    )


def grid_search(
    X,
    y,
    fit_fn: Callable[..., object],
    grid: dict,
    cv_k: int = 3,
    seed: int = 0,
    predict_fn: Optional[Callable] = None,
) -> GridSearchResult:
    """Mean-CV balanced accuracy over the grid cross-product.

    ``fit_fn(X, y, **config, seed=...)`` must return a model exposing
    predict_proba; the winning config is refit on all rows.
    """
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise ValueError("grid must be non-empty")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    folds = stratified_kfold(y, cv_k, seed)
    keys = list(grid.keys())
    table = []
    best = None
    for combo in itertools.product(*(grid[k] for k in keys)):
        config = dict(zip(keys, combo))
        scores = []
        for train_idx, test_idx in folds:
            model = fit_fn(X[train_idx], y[train_idx], seed=seed, **config)
            preds = _model_predictions(model, X[test_idx], predict_fn)
            counts = ConfusionCounts.from_predictions(y[test_idx], preds)
            scores.append(balanced_accuracy(counts))
        mean_score = float(np.mean(scores))
        table.append({"config": config, "mean_balanced_accuracy": mean_score})
        if best is None or _tie_key(config, mean_score) < _tie_key(best[0], best[1]):
            best = (config, mean_score)
    final = fit_fn(X, y, seed=seed, **best[0])
    return GridSearchResult(
        best_config=best[0], best_score=best[1], table=table, model=final
    )


def _model_predictions(model, X, predict_fn):
    if predict_fn is not None:
        return predict_fn(model, X)
    probs = model.predict_proba(X)
    codes = np.argmax(probs, axis=1)
    return np.asarray([model.codebook[c] for c in codes])


@dataclass
class ExperimentReport:
    task: str
    config: dict = field(default_factory=dict)
    seed: Optional[int] = None
    metrics: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "config": self.config,
            "seed": self.seed,
            "metrics": self.metrics,
            "timing": self.timing,
        }


def noise_sweep(evaluate_at_snr: Callable[[float], float], snr_list) -> list[dict]:
    """Per-SNR accuracy table from a caller-supplied evaluation closure."""
    return [
        {"snr_db": ("inf" if np.isinf(s) else float(s)),
         "accuracy": float(evaluate_at_snr(s))}
        for s in snr_list
    ]


def time_report(stages: dict, repeats: int = 10) -> dict:
    """Median and mean wall-clock seconds per named stage closure."""
    out = {}
    for name, fn in stages.items():
        samples = []
        for _ in range(max(repeats, 1)):
            start = time.perf_counter()
            fn()
            samples.append(time.perf_counter() - start)
        out[name] = {
            "median_s": float(np.median(samples)),
            "mean_s": float(np.mean(samples)),
            "runs": len(samples),
        }
    return out
