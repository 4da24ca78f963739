"""Binary classification trees grown by recursive best-split search.

Split candidates are midpoints between consecutive sorted unique feature
values; the split maximizing information gain wins, with ties broken by
(lower feature index, lower threshold). Nodes keep splitting while any
valid split exists, so zero-gain splits are taken when descendants can
still purify the partition (required for XOR-like data).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import EmptyChild, EmptyDataset


def gini_impurity(counts) -> float:
    counts = np.asarray(counts, dtype=np.float64)
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - np.sum(p * p))


def entropy_impurity(counts) -> float:
    """Shannon entropy in bits."""
    counts = np.asarray(counts, dtype=np.float64)
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    nz = p[p > 0]
    return float(-np.sum(nz * np.log2(nz)))


_IMPURITY = {"gini": gini_impurity, "entropy": entropy_impurity}


def information_gain(parent_labels, left_labels, right_labels,
                     impurity: str = "gini") -> float:
    """I(parent) - weighted I(children) for one candidate split."""
    left = np.asarray(left_labels)
    right = np.asarray(right_labels)
    if left.size == 0 or right.size == 0:
        raise EmptyChild("both children must be non-empty")
    parent = np.asarray(parent_labels)
    classes = np.unique(parent)
    lut = {c: i for i, c in enumerate(classes)}
    imp = _IMPURITY[impurity]

    def counts(arr):
        out = np.zeros(len(classes))
        for v in arr:
            out[lut[v]] += 1
        return out

    n_p = parent.size
    c_l, c_r = counts(left), counts(right)
    return (
        imp(counts(parent))
        - c_l.sum() / n_p * imp(c_l)
        - c_r.sum() / n_p * imp(c_r)
    )


@dataclass
class Node:
    """One tree node; leaves carry a payload (probability vector or score)."""

    feature: Optional[int] = None
    threshold: Optional[float] = None
    left: Optional["Node"] = None
    right: Optional["Node"] = None
    value: Optional[list] = None
    n_samples: int = 0
    gain: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"value": self.value, "n": self.n_samples}
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "gain": self.gain,
            "n": self.n_samples,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Node":
        if "feature" not in d:
            return cls(value=d["value"], n_samples=d["n"])
        return cls(
            feature=d["feature"],
            threshold=d["threshold"],
            gain=d["gain"],
            n_samples=d["n"],
            left=cls.from_dict(d["left"]),
            right=cls.from_dict(d["right"]),
        )


@dataclass(frozen=True)
class CartConfig:
    max_depth: Optional[int] = None
    impurity: str = "gini"
    min_samples_split: int = 2

    def __post_init__(self):
        if self.impurity not in _IMPURITY:
            raise ValueError(f"impurity must be one of {tuple(_IMPURITY)}")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")


def _node_impurity(y_codes: np.ndarray, k: int, kind: str) -> float:
    return _IMPURITY[kind](np.bincount(y_codes, minlength=k))


def _scan_feature(x: np.ndarray, y_codes: np.ndarray, k: int, kind: str):
    """Best (gain, threshold) over this feature's midpoint candidates."""
    order = np.argsort(x, kind="stable")
    xs = x[order]
    ys = y_codes[order]
    n = xs.shape[0]
    bounds = np.nonzero(xs[:-1] < xs[1:])[0]
    if bounds.size == 0:
        return None
    onehot = np.zeros((n, k))
    onehot[np.arange(n), ys] = 1.0
    cum = np.cumsum(onehot, axis=0)
    left = cum[bounds]
    total = cum[-1]
    right = total[None, :] - left
    nl = (bounds + 1).astype(np.float64)
    nr = n - nl

    def imp(counts, sizes):
        p = counts / sizes[:, None]
        if kind == "gini":
            return 1.0 - np.sum(p * p, axis=1)
        return -np.sum(np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0), axis=1)

    parent = _IMPURITY[kind](total)
    gains = parent - (nl / n) * imp(left, nl) - (nr / n) * imp(right, nr)
    best = int(np.argmax(gains))  # first max: lowest threshold on ties
    thr = 0.5 * (xs[bounds[best]] + xs[bounds[best] + 1])
    return float(gains[best]), float(thr)


def _leaf(y_codes: np.ndarray, k: int) -> Node:
    counts = np.bincount(y_codes, minlength=k).astype(np.float64)
    return Node(value=list(counts / counts.sum()), n_samples=int(y_codes.size))


def grow_classification_tree(
    X: np.ndarray,
    y_codes: np.ndarray,
    k: int,
    cfg: CartConfig,
    depth: int = 0,
    rng: Optional[np.random.Generator] = None,
    max_features: Optional[int] = None,
) -> Node:
    n = y_codes.shape[0]
    pure = np.all(y_codes == y_codes[0])
    depth_reached = cfg.max_depth is not None and depth >= cfg.max_depth
    if pure or depth_reached or n < cfg.min_samples_split:
        return _leaf(y_codes, k)

    n_feat = X.shape[1]
    if max_features is not None and max_features < n_feat:
        candidates = np.sort(rng.choice(n_feat, size=max_features, replace=False))
    else:
        candidates = np.arange(n_feat)

    best = None  # (gain, feature, threshold)
    for f in candidates:
        scan = _scan_feature(X[:, f], y_codes, k, cfg.impurity)
        if scan is None:
            continue
        gain, thr = scan
        if best is None or gain > best[0]:
            best = (gain, int(f), thr)
    if best is None:
        return _leaf(y_codes, k)

    gain, f, thr = best
    mask = X[:, f] <= thr
    node = Node(feature=f, threshold=thr, gain=gain, n_samples=n)
    node.left = grow_classification_tree(
        X[mask], y_codes[mask], k, cfg, depth + 1, rng, max_features
    )
    node.right = grow_classification_tree(
        X[~mask], y_codes[~mask], k, cfg, depth + 1, rng, max_features
    )
    return node


def tree_apply(node: Node, X: np.ndarray) -> np.ndarray:
    """Leaf payloads for every row of X, stacked into an (n, payload) array."""
    if X.shape[0] == 0:
        return np.empty((0, 0))
    width = len(_find_leaf(node, X[0]).value)
    out = np.empty((X.shape[0], width))
    for i in range(X.shape[0]):
        out[i] = _find_leaf(node, X[i]).value
    return out


def _find_leaf(node: Node, x: np.ndarray) -> Node:
    while not node.is_leaf:
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node


def cart_fit(X, y, cfg: CartConfig = CartConfig()):
    """Greedy best-split tree; returns a TreeEnsembleModel of kind CART."""
    from .model import TreeEnsembleModel

    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyDataset("training data must be a non-empty 2-D matrix")
    if X.shape[0] != y.shape[0]:
        raise ValueError("X and y row counts differ")
    codebook, y_codes = np.unique(y, return_inverse=True)
    root = grow_classification_tree(X, y_codes, len(codebook), cfg)
    return TreeEnsembleModel(
        kind="CART",
        trees=[root],
        codebook=[c.item() if hasattr(c, "item") else c for c in codebook],
        config={
            "max_depth": cfg.max_depth,
            "impurity": cfg.impurity,
            "min_samples_split": cfg.min_samples_split,
        },
        n_features=X.shape[1],
        metadata={},
    )
