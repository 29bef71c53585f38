"""Early stock-market crash detection: indicators, VaR labels, SMOTE-ENN,
recurrent nets and tree ensembles, all on numpy."""
from .errors import CrashwatchError
from .evaluation import NOT_DEFINED, ConfusionCounts, MetricsReport, auc_prc, evaluate
from .indicators import IndicatorSpec, Kind, LagSet, build_catalog, default_catalog
from .labeling import LabelSeries, VarScenario, label_by_var, label_crashes, var_threshold
from .market_data import (
    FeaturePanel, OhlcvBar, PriceSeries, align_calendars, drop_sparse_columns, knn_impute, parse_csv, read_csv,
    trim_warmup,
)
from .resampling import ResampleConfig, Resampled, enn, smote, smote_enn
from .windowing import WindowTensor, apply_standardizer, fit_standardizer, flatten_windows, make_windows

__version__ = "0.1.0"

__all__ = [
    "CrashwatchError", "NOT_DEFINED", "ConfusionCounts", "MetricsReport", "auc_prc", "evaluate",
    "IndicatorSpec", "Kind", "LagSet", "build_catalog", "default_catalog",
    "LabelSeries", "VarScenario", "label_by_var", "label_crashes", "var_threshold",
    "FeaturePanel", "OhlcvBar", "PriceSeries", "align_calendars", "drop_sparse_columns", "knn_impute",
    "parse_csv", "read_csv", "trim_warmup",
    "ResampleConfig", "Resampled", "enn", "smote", "smote_enn",
    "WindowTensor", "apply_standardizer", "fit_standardizer", "flatten_windows", "make_windows",
]
