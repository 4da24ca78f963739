"""Stagewise gradient boosting for the multinomial deviance.

Per-class raw scores start at the log class priors. Every iteration fits
one least-squares regression tree per class to the residual (one-hot minus
softmax probability) on the chosen subsample; leaf values take the one-step
Newton update for the multinomial loss, and scores move by the learning
rate. Training deviance is recorded per iteration on the full data.
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from ..errors import EmptyDataset, NonFiniteLoss, SingleClass
from .cart import Node, _find_leaf

#: hyperparameter grids: the full-scale search and a desk-scale one
GBC_GRID_FULL = {
    "n_estimators": [5000, 7000, 10000, 12000, 15000],
    "max_depth": [3, 5, 7, 10, 15],
    "learning_rate": [0.01, 0.05, 0.07, 0.1],
}
GBC_GRID_SMALL = {
    "n_estimators": [50, 100, 200],
    "max_depth": [3],
    "learning_rate": [0.1],
}


@dataclass(frozen=True)
class GbcConfig:
    n_estimators: int = 100
    max_depth: int = 3
    learning_rate: float = 0.1
    subsample: float = 1.0
    min_samples_split: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.n_estimators < 0:
            raise ValueError("n_estimators must be >= 0")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must be in (0, 1]")
        if not 0.0 < self.subsample <= 1.0:
            raise ValueError("subsample must be in (0, 1]")


def softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def multinomial_deviance(y_codes: np.ndarray, scores: np.ndarray) -> float:
    """Mean negative log-likelihood of the true classes under softmax(scores)."""
    p = softmax(scores)
    picked = p[np.arange(y_codes.shape[0]), y_codes]
    return float(-np.mean(np.log(np.clip(picked, 1e-300, None))))


def _scan_feature_sse(x: np.ndarray, r: np.ndarray):
    """Best (sse_reduction, threshold) for a least-squares split on r."""
    order = np.argsort(x, kind="stable")
    xs = x[order]
    rs = r[order]
    n = xs.shape[0]
    bounds = np.nonzero(xs[:-1] < xs[1:])[0]
    if bounds.size == 0:
        return None
    csum = np.cumsum(rs)
    csum2 = np.cumsum(rs * rs)
    nl = (bounds + 1).astype(np.float64)
    nr = n - nl
    sum_l = csum[bounds]
    sum_r = csum[-1] - sum_l
    sse_l = csum2[bounds] - sum_l * sum_l / nl
    sse_r = (csum2[-1] - csum2[bounds]) - sum_r * sum_r / nr
    sse_parent = csum2[-1] - csum[-1] * csum[-1] / n
    red = sse_parent - sse_l - sse_r
    best = int(np.argmax(red))
    thr = 0.5 * (xs[bounds[best]] + xs[bounds[best] + 1])
    return float(red[best]), float(thr)


def _newton_leaf(r: np.ndarray, k: int) -> float:
    """One-step Newton value for a terminal region of the multinomial loss."""
    num = r.sum()
    den = np.sum(np.abs(r) * (1.0 - np.abs(r)))
    if den < 1e-12:
        return 0.0
    return (k - 1.0) / k * num / den


def _grow_regression_tree(X, r, k_classes, max_depth, min_samples_split, depth=0) -> Node:
    n = r.shape[0]
    if depth >= max_depth or n < min_samples_split or np.all(r == r[0]):
        return Node(value=[_newton_leaf(r, k_classes)], n_samples=n)
    best = None
    for f in range(X.shape[1]):
        scan = _scan_feature_sse(X[:, f], r)
        if scan is None:
            continue
        red, thr = scan
        if best is None or red > best[0]:
            best = (red, f, thr)
    if best is None:
        return Node(value=[_newton_leaf(r, k_classes)], n_samples=n)
    red, f, thr = best
    mask = X[:, f] <= thr
    node = Node(feature=f, threshold=thr, gain=red, n_samples=n)
    node.left = _grow_regression_tree(
        X[mask], r[mask], k_classes, max_depth, min_samples_split, depth + 1
    )
    node.right = _grow_regression_tree(
        X[~mask], r[~mask], k_classes, max_depth, min_samples_split, depth + 1
    )
    return node


def _tree_values(node: Node, X: np.ndarray) -> np.ndarray:
    out = np.empty(X.shape[0])
    for i in range(X.shape[0]):
        out[i] = _find_leaf(node, X[i]).value[0]
    return out


def gbc_fit(X, y, cfg: GbcConfig = GbcConfig()):
    """Functional gradient descent on the multinomial deviance."""
    from .model import TreeEnsembleModel

    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyDataset("training data must be a non-empty 2-D matrix")
    codebook, y_codes = np.unique(y, return_inverse=True)
    k = len(codebook)
    if k < 2:
        raise SingleClass("gradient boosting needs at least two classes")

    n = X.shape[0]
    priors = np.bincount(y_codes, minlength=k) / n
    init_raw = np.log(priors)
    scores = np.tile(init_raw, (n, 1))
    onehot = np.zeros((n, k))
    onehot[np.arange(n), y_codes] = 1.0

    rng = np.random.default_rng(cfg.seed)
    stages: list[list[Node]] = []
    deviance: list[float] = []
    n_sub = max(1, int(round(cfg.subsample * n)))

    for m in range(cfg.n_estimators):
        p = softmax(scores)
        residual = onehot - p
        rows = (
            np.sort(rng.choice(n, size=n_sub, replace=False))
            if n_sub < n
            else np.arange(n)
        )
        stage = []
        for cls in range(k):
            tree = _grow_regression_tree(
                X[rows], residual[rows, cls], k, cfg.max_depth, cfg.min_samples_split
            )
            stage.append(tree)
            scores[:, cls] += cfg.learning_rate * _tree_values(tree, X)
        stages.append(stage)
        dev = multinomial_deviance(y_codes, scores)
        if not np.isfinite(dev):
            raise NonFiniteLoss(
                f"training deviance became non-finite at iteration {m}", iteration=m
            )
        deviance.append(dev)

    return TreeEnsembleModel(
        kind="GBC",
        trees=stages,
        codebook=[c.item() if hasattr(c, "item") else c for c in codebook],
        config={
            "n_estimators": cfg.n_estimators,
            "max_depth": cfg.max_depth,
            "learning_rate": cfg.learning_rate,
            "subsample": cfg.subsample,
            "min_samples_split": cfg.min_samples_split,
        },
        n_features=X.shape[1],
        metadata={
            "seed": cfg.seed,
            "init_raw": [float(v) for v in init_raw],
            "train_deviance": deviance,
        },
    )
