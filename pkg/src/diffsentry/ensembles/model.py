"""Shared trained-model container, prediction, and versioned JSON files."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import SchemaMismatch
from .cart import Node, _find_leaf

FILE_VERSION = 1


@dataclass
class TreeEnsembleModel:
    """Trained CART / RF / GBC model with its class codebook and metadata.

    Immutable after fit by convention; safe to share across threads for
    prediction. ``schema_hash`` pins the feature layout the model expects.
    """

    kind: str                    # "CART" | "RF" | "GBC"
    trees: list                  # CART/RF: [Node]; GBC: [[Node per class] per stage]
    codebook: list
    config: dict
    n_features: int
    metadata: dict = field(default_factory=dict)
    schema_hash: Optional[str] = None

    def trees_flat(self):
        if self.kind == "GBC":
            for stage in self.trees:
                yield from stage
        else:
            yield from self.trees

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise SchemaMismatch(
                f"model expects {self.n_features} features, got {X.shape[1]}"
            )
        if self.kind == "CART":
            return _leaf_matrix(self.trees[0], X)
        if self.kind == "RF":
            acc = np.zeros((X.shape[0], len(self.codebook)))
            for tree in self.trees:
                acc += _leaf_matrix(tree, X)
            return acc / len(self.trees)
        # GBC: raw scores -> softmax
        from .gbc import softmax

        scores = np.tile(np.asarray(self.metadata["init_raw"]), (X.shape[0], 1))
        lr = self.config["learning_rate"]
        for stage in self.trees:
            for cls, tree in enumerate(stage):
                scores[:, cls] += lr * _leaf_values(tree, X)
        return softmax(scores)


def _leaf_matrix(root: Node, X: np.ndarray) -> np.ndarray:
    out = np.empty((X.shape[0], len(_any_leaf(root).value)))
    for i in range(X.shape[0]):
        out[i] = _find_leaf(root, X[i]).value
    return out


def _leaf_values(root: Node, X: np.ndarray) -> np.ndarray:
    out = np.empty(X.shape[0])
    for i in range(X.shape[0]):
        out[i] = _find_leaf(root, X[i]).value[0]
    return out


def _any_leaf(node: Node) -> Node:
    while not node.is_leaf:
        node = node.left
    return node


def predict_proba(model: TreeEnsembleModel, features) -> np.ndarray:
    return model.predict_proba(_coerce(model, features))


def predict(model: TreeEnsembleModel, features):
    """(predicted label, probability vector) for one feature vector."""
    probs = model.predict_proba(_coerce(model, features))[0]
    return model.codebook[int(np.argmax(probs))], probs


def _coerce(model: TreeEnsembleModel, features):
    # FeatureVector instances carry their own schema hash; raw arrays are
    # checked by width only
    schema = getattr(features, "schema", None)
    if schema is not None:
        if model.schema_hash is not None and schema != model.schema_hash:
            raise SchemaMismatch(
                f"feature schema {schema} does not match model schema "
                f"{model.schema_hash}"
            )
        return np.asarray(features.values, dtype=np.float64)
    return np.asarray(features, dtype=np.float64)


def model_to_dict(model: TreeEnsembleModel) -> dict:
    if model.kind == "GBC":
        trees = [[t.to_dict() for t in stage] for stage in model.trees]
    else:
        trees = [t.to_dict() for t in model.trees]
    return {
        "version": FILE_VERSION,
        "kind": model.kind,
        "codebook": list(model.codebook),
        "config": model.config,
        "n_features": model.n_features,
        "schema_hash": model.schema_hash,
        "metadata": model.metadata,
        "trees": trees,
    }


def model_from_dict(d: dict, expected_schema: Optional[str] = None) -> TreeEnsembleModel:
    if d.get("version") != FILE_VERSION:
        raise ValueError(f"unsupported model file version {d.get('version')!r}")
    if expected_schema is not None and d.get("schema_hash") != expected_schema:
        raise SchemaMismatch(
            f"model file schema {d.get('schema_hash')} does not match expected "
            f"{expected_schema}"
        )
    if d["kind"] == "GBC":
        trees = [[Node.from_dict(t) for t in stage] for stage in d["trees"]]
    else:
        trees = [Node.from_dict(t) for t in d["trees"]]
    return TreeEnsembleModel(
        kind=d["kind"],
        trees=trees,
        codebook=d["codebook"],
        config=d["config"],
        n_features=d["n_features"],
        metadata=d["metadata"],
        schema_hash=d.get("schema_hash"),
    )


def save_model(model: TreeEnsembleModel, path) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(model_to_dict(model), fh, sort_keys=True)
        fh.write("\n")


def load_model(path, expected_schema: Optional[str] = None) -> TreeEnsembleModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh), expected_schema)
