"""Time-series cross-validated study: splits, grid search, repeated runs, persistence."""
from .config import FAMILIES, STUDY_GRIDS, ExperimentConfig, MarketSpec, ResamplingSettings, config_from_dict, expand_grid, load_config
from .pipeline import (
    MarketData, ModelBundle, build_features, derive_seed, evaluate_bundle, fit_bundle, fold_windows,
    labeled_windows, prepare_market,
)
from .plotting import ProbabilitySeries, emit_probability_series, render_svg
from .runner import aggregate, run_cell, run_experiment
from .search import GridPoint, SearchResult, grid_search
from .splits import STUDY_PLAN, TEST, VALIDATION, Fold, SplitPlan, assert_no_leakage, make_split_plan

__all__ = [
    "FAMILIES", "STUDY_GRIDS", "ExperimentConfig", "MarketSpec", "ResamplingSettings", "config_from_dict",
    "expand_grid", "load_config", "MarketData", "ModelBundle", "build_features", "derive_seed",
    "evaluate_bundle", "fit_bundle", "fold_windows", "labeled_windows", "prepare_market",
    "ProbabilitySeries", "emit_probability_series", "render_svg", "aggregate", "run_cell", "run_experiment",
    "GridPoint", "SearchResult", "grid_search", "STUDY_PLAN", "TEST", "VALIDATION", "Fold", "SplitPlan",
    "assert_no_leakage", "make_split_plan",
]
