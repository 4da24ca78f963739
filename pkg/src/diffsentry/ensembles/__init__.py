"""From-scratch tree ensembles: CART, random forest, gradient boosting."""

from .cart import (
    CartConfig,
    Node,
    cart_fit,
    entropy_impurity,
    gini_impurity,
    information_gain,
)
from .forest import ForestConfig, forest_fit, rank_features
from .gbc import GBC_GRID_FULL, GBC_GRID_SMALL, GbcConfig, gbc_fit, multinomial_deviance, softmax
from .model import TreeEnsembleModel, load_model, predict, predict_proba, save_model

__all__ = [
    "CartConfig",
    "Node",
    "cart_fit",
    "entropy_impurity",
    "gini_impurity",
    "information_gain",
    "ForestConfig",
    "forest_fit",
    "rank_features",
    "GbcConfig",
    "gbc_fit",
    "softmax",
    "multinomial_deviance",
    "GBC_GRID_SMALL",
    "GBC_GRID_FULL",
    "TreeEnsembleModel",
    "predict",
    "predict_proba",
    "save_model",
    "load_model",
]
