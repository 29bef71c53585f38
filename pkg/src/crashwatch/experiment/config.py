"""Experiment configuration: JSON document to typed settings and hyperparameter grids."""
from __future__ import annotations

import itertools
import json
import os
from dataclasses import dataclass, field, fields

from ..ensembles import BoostHyper, ForestHyper
from ..labeling import STUDY_ALPHAS
from ..seqnet import RnnHyper
from .splits import SplitPlan, make_split_plan

FAMILIES = ("rnn", "lstm", "gru", "forest", "boost")
_CELL = {"rnn": "simple", "lstm": "lstm", "gru": "gru"}

STUDY_GRIDS = {
    "rnn": {"neurons": [32, 64, 128], "layers": [1, 2], "learning_rate": [0.001, 0.01, 0.1]},
    "lstm": {"neurons": [32, 64, 128], "layers": [1, 2], "learning_rate": [0.001, 0.01, 0.1]},
    "gru": {"neurons": [32, 64, 128], "layers": [1, 2], "learning_rate": [0.001, 0.01, 0.1]},
    "forest": {"n_estimators": [100, 200, 300], "max_depth": [10, 20, 30]},
    "boost": {"n_estimators": [100, 200, 300], "learning_rate": [0.01, 0.1, 0.2], "max_depth": [3, 4, 5]},
}


@dataclass(frozen=True)
class MarketSpec:
    name: str
    anchor: str
    instruments: dict  # instrument id -> CSV path

    def paths(self, data_dir: str) -> dict:
        return {k: os.path.join(data_dir, v) for k, v in self.instruments.items()}


@dataclass(frozen=True)
class ResamplingSettings:
    enabled: bool = True
    smote_k: int = 5
    enn_k: int = 3
    ratio: float = 1.0
    baseline_comparison: bool = False

    def modes(self) -> list[bool]:
        """Resampling on/off for each pass of the experiment."""
        if self.baseline_comparison:
            return [False, True]
        return [self.enabled]


@dataclass
class ExperimentConfig:
    markets: list
    alphas: tuple = STUDY_ALPHAS
    plan: SplitPlan = None
    models: dict = field(default_factory=lambda: {k: dict(v) for k, v in STUDY_GRIDS.items()})
    resampling: ResamplingSettings = ResamplingSettings()
    repetitions: int = 10
    seed: int = 0
    data_dir: str = "."
    out_dir: str = "out"
    timesteps: int = 7
    decision_threshold: float = 0.5
    threshold_window: str = "full"
    quantile_method: str = "linear"
    impute_k: int = 5
    max_missing_frac: float = 0.20
    val_fraction: float = 0.2
    expected_predictors: int | None = None

    def __post_init__(self):
        if self.plan is None:
            self.plan = make_split_plan()
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if not self.models:
            raise ValueError("at least one model family is required")
        unknown = set(self.models) - set(FAMILIES)
        if unknown:
            raise ValueError(f"unknown model families {sorted(unknown)}; choose from {FAMILIES}")
        if self.threshold_window not in ("full", "train"):
            raise ValueError("threshold_window must be 'full' or 'train'")

    def market(self, name: str) -> MarketSpec:
        for m in self.markets:
            if m.name == name:
                return m
        raise KeyError(f"market {name!r} not in config")


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        doc = json.load(fh)
    base = os.path.dirname(os.path.abspath(path))
    return config_from_dict(doc, base)


def config_from_dict(doc: dict, base_dir: str = ".") -> ExperimentConfig:
    known = {"markets", "alphas", "plan", "models", "resampling", "repetitions", "seed", "paths",
             "timesteps", "decision_threshold", "threshold_window", "quantile_method", "impute_k",
             "max_missing_frac", "val_fraction", "expected_predictors"}
    extra = set(doc) - known
    if extra:
        raise ValueError(f"unknown config keys: {sorted(extra)}")
    paths = doc.get("paths", {})
    markets = [MarketSpec(m["name"], m["anchor"], dict(m["instruments"])) for m in doc["markets"]]
    rs = doc.get("resampling", {})
    kw = {
        "markets": markets,
        "alphas": tuple(float(a) for a in doc.get("alphas", STUDY_ALPHAS)),
        "plan": make_split_plan(doc.get("plan")),
        "models": doc.get("models") or {k: dict(v) for k, v in STUDY_GRIDS.items()},
        "resampling": ResamplingSettings(
            bool(rs.get("enabled", True)), int(rs.get("smote_k", 5)), int(rs.get("enn_k", 3)),
            float(rs.get("ratio", 1.0)), bool(rs.get("baseline_comparison", False)),
        ),
        "data_dir": os.path.normpath(os.path.join(base_dir, paths.get("data", "."))),
        "out_dir": os.path.normpath(os.path.join(base_dir, paths.get("out", "out"))),
    }
    for key in ("repetitions", "seed", "timesteps", "impute_k"):
        if key in doc:
            kw[key] = int(doc[key])
    for key in ("decision_threshold", "max_missing_frac", "val_fraction"):
        if key in doc:
            kw[key] = float(doc[key])
    for key in ("threshold_window", "quantile_method"):
        if key in doc:
            kw[key] = str(doc[key])
    if doc.get("expected_predictors") is not None:
        kw["expected_predictors"] = int(doc["expected_predictors"])
    return ExperimentConfig(**kw)


def _hyper_class(family):
    return {"forest": ForestHyper, "boost": BoostHyper}.get(family, RnnHyper)


def expand_grid(family: str, spec: dict) -> list:
    """Hyperparameter objects for every grid point, in declaration order.

    List-valued keys are grid axes (the first key varies slowest); scalar keys
    are fixed settings.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    cls = _hyper_class(family)
    allowed = {f.name for f in fields(cls)}
    bad = set(spec) - allowed
    if bad:
        raise ValueError(f"{family}: unknown hyperparameters {sorted(bad)}")
    axes = [(k, v) for k, v in spec.items() if isinstance(v, list)]
    fixed = {k: v for k, v in spec.items() if not isinstance(v, list)}
    if family in _CELL:
        fixed["cell"] = _CELL[family]
    out = []
    for combo in itertools.product(*(v for _, v in axes)):
        params = dict(fixed)
        params.update({k: val for (k, _), val in zip(axes, combo)})
        out.append(cls(**params))
    if not out:
        raise ValueError(f"{family}: empty grid")
    return out
