"""Random forest and second-order boosted trees."""
from .boost import BoostedTrees, BoostHyper, fit_boost, predict_boost
from .forest import ForestHyper, RandomForest, fit_forest, predict_forest
from .tree import DecisionTree, best_split, fit_tree

__all__ = [
    "BoostedTrees", "BoostHyper", "fit_boost", "predict_boost",
    "ForestHyper", "RandomForest", "fit_forest", "predict_forest",
    "DecisionTree", "best_split", "fit_tree",
]
