"""Gradient boosting: loss gradient numerics, monotone deviance, round trips."""

import numpy as np
import pytest

from diffsentry.ensembles import (
    GbcConfig,
    gbc_fit,
    load_model,
    multinomial_deviance,
    predict,
    save_model,
    softmax,
)
from diffsentry.errors import SchemaMismatch, SingleClass


def _loss(scores, onehot):
    p = softmax(scores)
    return -np.sum(onehot * np.log(p))


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(19)
    worst = 0.0
    for _ in range(100):
        k = int(rng.integers(2, 6))
        scores = rng.normal(size=(1, k))
        onehot = np.zeros((1, k))
        onehot[0, rng.integers(k)] = 1.0
        analytic = softmax(scores) - onehot
        h = 1e-6
        for j in range(k):
            up = scores.copy(); up[0, j] += h
            dn = scores.copy(); dn[0, j] -= h
            fd = (_loss(up, onehot) - _loss(dn, onehot)) / (2 * h)
            rel = abs(fd - analytic[0, j]) / max(abs(analytic[0, j]), 1e-3)
            worst = max(worst, rel)
    assert worst <= 1e-6


def _blobs(n=120, k=3, seed=31):
    rng = np.random.default_rng(seed)
    centers = rng.normal(scale=3.0, size=(k, 4))
    X = np.vstack([rng.normal(loc=c, size=(n // k, 4)) for c in centers])
    y = np.repeat(np.arange(k), n // k)
    return X, y


def test_deviance_non_increasing_full_subsample():
    X, y = _blobs()
    model = gbc_fit(X, y, GbcConfig(n_estimators=60, max_depth=3,
                                    learning_rate=0.1, subsample=1.0, seed=0))
    dev = model.metadata["train_deviance"]
    assert len(dev) == 60
    assert all(dev[i + 1] <= dev[i] + 1e-12 for i in range(len(dev) - 1))


def test_zero_iterations_returns_priors():
    X, y = _blobs(90, 3)
    model = gbc_fit(X, y, GbcConfig(n_estimators=0))
    probs = model.predict_proba(X[:7])
    priors = np.bincount(y) / len(y)
    assert np.allclose(probs, priors[None, :], atol=1e-12)


def test_xor_is_learned():
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    y = np.array([0, 1, 1, 0])
    model = gbc_fit(X, y, GbcConfig(n_estimators=100, max_depth=2,
                                    learning_rate=0.1, seed=0))
    preds = np.argmax(model.predict_proba(X), axis=1)
    assert np.array_equal(preds, y)


def test_single_class_rejected():
    X = np.zeros((10, 2))
    with pytest.raises(SingleClass):
        gbc_fit(X, np.zeros(10), GbcConfig(n_estimators=1))


def test_subsample_deterministic_under_seed():
    X, y = _blobs(150, 3, seed=5)
    cfg = GbcConfig(n_estimators=30, max_depth=2, subsample=0.7, seed=12)
    a = gbc_fit(X, y, cfg)
    b = gbc_fit(X, y, cfg)
    assert np.array_equal(a.predict_proba(X), b.predict_proba(X))


def test_probabilities_sum_to_one():
    X, y = _blobs(120, 4, seed=8)
    model = gbc_fit(X, y, GbcConfig(n_estimators=20, max_depth=2, seed=0))
    probs = model.predict_proba(X)
    assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-9)


def test_serialization_round_trip_bit_identical(tmp_path):
    X, y = _blobs(120, 3, seed=9)
    model = gbc_fit(X, y, GbcConfig(n_estimators=25, max_depth=3, seed=2))
    path = tmp_path / "model.json"
    save_model(model, path)
    loaded = load_model(path)
    rng = np.random.default_rng(10)
    probe = rng.normal(size=(1000, 4))
    assert np.array_equal(model.predict_proba(probe), loaded.predict_proba(probe))


def test_schema_hash_checked_on_load(tmp_path):
    X, y = _blobs(60, 2, seed=11)
    model = gbc_fit(X, y, GbcConfig(n_estimators=5, seed=0))
    model.schema_hash = "abc123"
    path = tmp_path / "model.json"
    save_model(model, path)
    assert load_model(path, expected_schema="abc123").schema_hash == "abc123"
    with pytest.raises(SchemaMismatch):
        load_model(path, expected_schema="something-else")


def test_predict_returns_label_and_probabilities():
    X, y = _blobs(90, 3, seed=13)
    model = gbc_fit(X, y, GbcConfig(n_estimators=20, max_depth=2, seed=1))
    label, probs = predict(model, X[0])
    assert label in model.codebook
    assert probs.shape == (3,)
    assert probs.sum() == pytest.approx(1.0, abs=1e-9)


def test_deviance_definition():
    scores = np.array([[2.0, 0.0], [0.0, 1.0]])
    y = np.array([0, 1])
    p = softmax(scores)
    want = -np.mean([np.log(p[0, 0]), np.log(p[1, 1])])
    assert multinomial_deviance(y, scores) == pytest.approx(want, rel=1e-12)
