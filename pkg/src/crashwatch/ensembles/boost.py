"""Gradient-boosted trees on the logistic loss with Newton leaf weights."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import SingleClassTraining
from ..seqnet.cells import sigmoid
from .tree import DecisionTree, fit_tree, presort

N_ESTIMATORS_GRID = (100, 200, 300)
LEARNING_RATE_GRID = (0.01, 0.1, 0.2)
MAX_DEPTH_GRID = (3, 4, 5)
FORMAT = "crashwatch.boost"
VERSION = 1


@dataclass(frozen=True)
class BoostHyper:
    n_estimators: int = 100
    learning_rate: float = 0.1
    max_depth: int = 3
    reg_lambda: float = 1.0
    seed: int = 0
    min_child_weight: float = 0.0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.n_estimators < 0 or self.max_depth < 1:
            raise ValueError("n_estimators must be >= 0 and max_depth >= 1")


@dataclass
class BoostedTrees:
    hyper: BoostHyper
    n_features: int
    base_score: float
    trees: list = field(default_factory=list)
    train_loss: list = field(default_factory=list)

    def raw_score(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.full(X.shape[0], self.base_score)
        for t in self.trees:
            out += self.hyper.learning_rate * t.predict(X)
        return out

    def predict_proba(self, X) -> np.ndarray:
        return predict_boost(self, X)

    def to_json(self) -> str:
        return json.dumps({
            "format": FORMAT, "version": VERSION, "hyper": asdict(self.hyper),
            "n_features": self.n_features, "base_score": self.base_score,
            "trees": [t.to_dict() for t in self.trees],
        })

    @classmethod
    def from_json(cls, text: str) -> "BoostedTrees":
        d = json.loads(text)
        if d.get("format") != FORMAT:
            raise ValueError("not a boosted-trees checkpoint")
        return cls(BoostHyper(**d["hyper"]), d["n_features"], d["base_score"],
                   [DecisionTree.from_dict(t) for t in d["trees"]])


def log_loss(y, p) -> float:
    p = np.clip(p, 1e-15, 1 - 1e-15)
    return float(-np.mean(y * np.log(p) + (1 - y) * np.log(1 - p)))


def fit_boost(X, y, hyper: BoostHyper = BoostHyper()) -> BoostedTrees:
    """Stagewise additive log-odds model; each round fits a tree to (p - y, p(1 - p))."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).astype(float)
    if np.unique(y).size < 2:
        raise SingleClassTraining("boosting needs both classes in the training labels")
    base = y.mean()
    model = BoostedTrees(hyper, X.shape[1], math.log(base / (1.0 - base)))
    raw = np.full(X.shape[0], model.base_score)
    model.train_loss.append(log_loss(y, sigmoid(raw)))
    sorted_rows = presort(X)
    for _ in range(hyper.n_estimators):
        p = sigmoid(raw)
        g = p - y
        h = p * (1.0 - p)
        tree = fit_tree(X, (g, h), hyper.max_depth, "newton", lam=hyper.reg_lambda,
                        min_child_weight=hyper.min_child_weight, sorted_rows=sorted_rows)
        model.trees.append(tree)
        raw += hyper.learning_rate * tree.predict(X)
        model.train_loss.append(log_loss(y, sigmoid(raw)))
    return model


def predict_boost(model: BoostedTrees, X) -> np.ndarray:
    return sigmoid(model.raw_score(X))
