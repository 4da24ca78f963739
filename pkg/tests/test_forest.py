"""Random forest: bagging behavior, determinism, impurity importances."""

import numpy as np
import pytest

from diffsentry.ensembles import (
    CartConfig,
    ForestConfig,
    cart_fit,
    forest_fit,
    rank_features,
)
from diffsentry.errors import EmptyDataset


def _blobs(n=200, seed=1):
    rng = np.random.default_rng(seed)
    half = n // 2
    a = rng.normal(loc=(-1.0, 0.0), scale=0.8, size=(half, 2))
    b = rng.normal(loc=(1.0, 0.5), scale=0.8, size=(half, 2))
    X = np.vstack([a, b])
    y = np.array([0] * half + [1] * half)
    return X, y


def test_single_tree_no_bootstrap_reduces_to_cart():
    X, y = _blobs(120, seed=4)
    forest = forest_fit(X, y, ForestConfig(n_estimators=1, max_features=None,
                                           bootstrap=False, seed=9))
    cart = cart_fit(X, y, CartConfig())
    assert np.array_equal(forest.predict_proba(X), cart.predict_proba(X))


def test_single_class_predicts_it_certainly():
    X = np.random.default_rng(0).normal(size=(30, 2))
    y = np.full(30, 7)
    model = forest_fit(X, y, ForestConfig(n_estimators=5, seed=1))
    probs = model.predict_proba(X)
    assert np.all(probs == 1.0)
    assert model.codebook == [7]


def test_forest_not_much_worse_than_single_tree_on_holdout():
    X, y = _blobs(200, seed=2)
    X_test, y_test = _blobs(200, seed=77)
    tree = cart_fit(X, y, CartConfig())
    forest = forest_fit(X, y, ForestConfig(n_estimators=30, seed=3))
    acc = lambda m: float(np.mean(np.argmax(m.predict_proba(X_test), 1) == y_test))
    assert acc(forest) >= acc(tree) - 0.02


def test_deterministic_under_seed():
    X, y = _blobs(150, seed=5)
    a = forest_fit(X, y, ForestConfig(n_estimators=10, seed=21))
    b = forest_fit(X, y, ForestConfig(n_estimators=10, seed=21))
    assert np.array_equal(a.predict_proba(X), b.predict_proba(X))
    c = forest_fit(X, y, ForestConfig(n_estimators=10, seed=22))
    assert not np.array_equal(a.predict_proba(X), c.predict_proba(X))


def test_empty_dataset_rejected():
    with pytest.raises(EmptyDataset):
        forest_fit(np.empty((0, 3)), np.empty(0), ForestConfig())


def test_informative_feature_ranked_first():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(250, 4))
    y = (X[:, 0] > 0.1).astype(int)
    model = forest_fit(X, y, ForestConfig(n_estimators=25, seed=2))
    ranking = rank_features(model)
    assert ranking[0][0] == 0
    assert ranking[0][1] > 0.5
    assert sum(score for _, score in ranking) == pytest.approx(1.0, abs=1e-9)


def test_identical_copies_share_importance():
    rng = np.random.default_rng(8)
    base = rng.normal(size=250)
    X = np.column_stack([base, base, base])
    y = (base > 0).astype(int)
    model = forest_fit(X, y, ForestConfig(n_estimators=200, max_features=1, seed=3))
    ranking = dict(rank_features(model))
    for idx in range(3):
        assert ranking[idx] == pytest.approx(1.0 / 3.0, abs=0.05)


def test_single_feature_importance_is_one():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(60, 1))
    y = (X[:, 0] > 0).astype(int)
    model = forest_fit(X, y, ForestConfig(n_estimators=5, seed=4))
    assert rank_features(model) == [(0, pytest.approx(1.0))]


def test_rank_features_fit_and_rank_form():
    rng = np.random.default_rng(10)
    X = rng.normal(size=(150, 3))
    y = (X[:, 2] > 0).astype(int)
    cfg = ForestConfig(n_estimators=15, seed=6)
    direct = rank_features(X, y, cfg)
    via_model = rank_features(forest_fit(X, y, cfg))
    assert direct == via_model
    assert direct[0][0] == 2
