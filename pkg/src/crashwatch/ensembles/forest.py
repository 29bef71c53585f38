"""Random forest of Gini trees on bootstrap samples."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import SingleClassTraining
from .tree import DecisionTree, fit_tree

N_ESTIMATORS_GRID = (100, 200, 300)
MAX_DEPTH_GRID = (10, 20, 30)
FORMAT = "crashwatch.forest"
VERSION = 1


@dataclass(frozen=True)
class ForestHyper:
    n_estimators: int = 100
    max_depth: int = 10
    features_per_split: str | int = "sqrt"
    min_samples_leaf: int = 1
    seed: int = 0
    bootstrap: bool = True

    def __post_init__(self):
        if self.n_estimators < 1 or self.max_depth < 1:
            raise ValueError("n_estimators and max_depth must be >= 1")

    def max_features(self, n_features: int) -> int:
        f = self.features_per_split
        if f == "sqrt":
            return max(1, int(np.sqrt(n_features)))
        if f in (None, "all"):
            return n_features
        return max(1, min(int(f), n_features))


@dataclass
class RandomForest:
    hyper: ForestHyper
    n_features: int
    trees: list = field(default_factory=list)

    def predict_proba(self, X) -> np.ndarray:
        return predict_forest(self, X)

    def to_json(self) -> str:
        return json.dumps({
            "format": FORMAT, "version": VERSION, "hyper": asdict(self.hyper),
            "n_features": self.n_features, "trees": [t.to_dict() for t in self.trees],
        })

    @classmethod
    def from_json(cls, text: str) -> "RandomForest":
        d = json.loads(text)
        if d.get("format") != FORMAT:
            raise ValueError("not a forest checkpoint")
        return cls(ForestHyper(**d["hyper"]), d["n_features"], [DecisionTree.from_dict(t) for t in d["trees"]])


def fit_forest(X, y, hyper: ForestHyper = ForestHyper(), allow_single_class: bool = False) -> RandomForest:
    """Each tree sees a bootstrap sample of size N and sqrt(F) candidate features per split."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).astype(float)
    if not allow_single_class and np.unique(y).size < 2:
        raise SingleClassTraining("random forest needs both classes in the training labels")
    n, F = X.shape
    m = hyper.max_features(F)
    model = RandomForest(hyper, F)
    for child in np.random.SeedSequence(hyper.seed).spawn(hyper.n_estimators):
        rng = np.random.default_rng(child)
        idx = rng.integers(n, size=n) if hyper.bootstrap else np.arange(n)
        tree = fit_tree(X[idx], y[idx], hyper.max_depth, "gini", max_features=m, rng=rng,
                        min_samples_leaf=hyper.min_samples_leaf)
        model.trees.append(tree)
    return model


def predict_forest(model: RandomForest, X, voting: str = "soft") -> np.ndarray:
    """Mean of per-tree leaf class frequencies, or the fraction of trees voting crash."""
    X = np.asarray(X, dtype=float)
    per_tree = np.array([t.predict(X) for t in model.trees])
    if voting == "hard":
        per_tree = (per_tree >= 0.5).astype(float)
    elif voting != "soft":
        raise ValueError("voting must be 'soft' or 'hard'")
    return per_tree.mean(axis=0)
