"""Per-market data preparation and the fit/evaluate path shared by search and runs."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import zlib
from dataclasses import dataclass, field

import numpy as np

from ..ensembles import BoostedTrees, RandomForest, fit_boost, fit_forest
from ..errors import AnchorNotFound, EmptySplit, SingleClassTraining
from ..evaluation import evaluate
from ..indicators import LagSet, _on_observed, build_catalog, default_catalog, simple_return
from ..labeling import LabelSeries, label_by_var
from ..market_data import (
    FeaturePanel, PriceSeries, drop_sparse_columns, hstack, knn_impute, read_csv, series_panel, trim_warmup,
)
from ..resampling import ResampleConfig, smote_enn
from ..seqnet import RecurrentNet, RnnHyper, TrainHistory, train
from ..windowing import (
    Standardizer, WindowTensor, apply_standardizer, fit_standardizer, flatten_windows, make_windows, unflatten,
)
from .config import ResamplingSettings
from .splits import assert_no_leakage

RECURRENT = ("rnn", "lstm", "gru")


def derive_seed(base: int, *keys) -> int:
    """Stable 32-bit seed from a base seed and any labels (strings, numbers)."""
    words = [int(base) & 0xFFFFFFFF] + [zlib.crc32(str(k).encode()) for k in keys]
    return int(np.random.SeedSequence(words).generate_state(1)[0])


# -- features ---------------------------------------------------------------

@dataclass(frozen=True)
class MarketData:
    name: str
    anchor: str
    panel: FeaturePanel
    returns: np.ndarray = field(repr=False)
    dropped: tuple = ()
    raw_columns: int = 0


def load_series(market, data_dir: str) -> list[PriceSeries]:
    return [read_csv(path, inst) for inst, path in market.paths(data_dir).items()]


def anchor_returns(series: PriceSeries, dates) -> np.ndarray:
    """Simple adjusted-close returns on the instrument's own calendar, read at ``dates``."""
    own = series_panel(series)
    r = _on_observed(own.column(f"{series.instrument_id}.adj_close"), simple_return)
    return FeaturePanel(own.dates, ("r",), r[:, None]).reindex(dates).values[:, 0]


def build_features(series_list, anchor: str, catalog=None, lags: LagSet = LagSet(),
                   max_missing_frac: float = 0.20, k: int = 5):
    """Indicators per instrument on its own calendar, joined on the anchor's dates,
    then sparse-column removal, warm-up trimming and KNN imputation.

    Returns ``(panel, dropped_column_names, raw_column_count)``.
    """
    by_id = {s.instrument_id: s for s in series_list}
    if anchor not in by_id:
        raise AnchorNotFound(anchor)
    if catalog is None:
        catalog = default_catalog(anchor, [s for s in by_id if s != anchor])
    dates = by_id[anchor].dates
    parts = []
    for inst, specs in catalog.items():
        own = series_panel(by_id[inst])
        parts.append(build_catalog(own, specs, lags).reindex(dates))
    raw = hstack(parts)
    sparse = drop_sparse_columns(raw, max_missing_frac)
    dropped = tuple(n for n in raw.names if n not in set(sparse.names))
    panel = knn_impute(trim_warmup(sparse), k)
    return panel, dropped, len(raw.names)


def prepare_market(cfg, market) -> MarketData:
    series = load_series(market, cfg.data_dir)
    panel, dropped, n_raw = build_features(series, market.anchor, max_missing_frac=cfg.max_missing_frac,
                                           k=cfg.impute_k)
    anchor = next(s for s in series if s.instrument_id == market.anchor)
    return MarketData(market.name, market.anchor, panel, anchor_returns(anchor, panel.dates), dropped, n_raw)


def study_mask(dates, plan) -> np.ndarray:
    start = min(f.train_start for f in plan.folds)
    end = max(f.eval_end for f in plan.folds)
    d = np.asarray(dates, dtype="datetime64[D]")
    return (d >= start) & (d <= end)


def labeled_windows(md: MarketData, alpha: float, T: int = 7, fit_mask=None,
                    method: str = "linear") -> tuple[WindowTensor, LabelSeries]:
    """Windows over the market panel; samples whose target return is missing are dropped."""
    labels = label_by_var(md.returns, alpha, md.panel.dates, fit_mask, method)
    w = make_windows(md.panel, labels, T)
    observed = ~labels.missing[np.searchsorted(labels.dates, w.sample_dates)]
    return (w if observed.all() else w.subset(observed)), labels


def fold_windows(md: MarketData, alpha: float, fold, cfg):
    """(train, eval) windows for a fold, labelled by the configured threshold window."""
    if cfg.threshold_window == "train":
        fit = fold.train_mask(md.panel.dates)
    else:
        fit = study_mask(md.panel.dates, cfg.plan)
    w, _ = labeled_windows(md, alpha, cfg.timesteps, fit, cfg.quantile_method)
    train_w = w.between(fold.train_start, fold.train_end)
    eval_w = w.between(fold.eval_start, fold.eval_end)
    assert_no_leakage(train_w.sample_dates, eval_w.sample_dates)
    return train_w, eval_w


# -- models -----------------------------------------------------------------

@dataclass
class ModelBundle:
    """A fitted model plus the train-fit standardizer it expects."""

    family: str
    hyper: object
    standardizer: Standardizer
    model: object
    history: TrainHistory | None = None

    def transform(self, w: WindowTensor) -> WindowTensor:
        return apply_standardizer(self.standardizer, w)

    def predict_proba(self, w: WindowTensor) -> np.ndarray:
        ws = self.transform(w)
        if ws.n_samples == 0:
            return np.empty(0)
        if self.family in RECURRENT:
            return self.model.predict_proba(ws.values)
        flat, _ = flatten_windows(ws)
        return self.model.predict_proba(flat)

    def dumps(self) -> bytes:
        if self.family in RECURRENT:
            epoch = self.history.best_epoch if self.history else None
            return self.model.dumps(self.hyper, epoch=epoch,
                                    extra={"family": self.family, "standardizer": self.standardizer.to_dict()})
        doc = {
            "family": self.family,
            "standardizer": self.standardizer.to_dict(),
            "model": json.loads(self.model.to_json()),
        }
        return json.dumps(doc, sort_keys=True).encode("utf-8")

    @classmethod
    def loads(cls, blob: bytes) -> "ModelBundle":
        if blob[:1] == b"{":
            doc = json.loads(blob.decode("utf-8"))
            model_json = json.dumps(doc["model"])
            if doc["family"] == "forest":
                model = RandomForest.from_json(model_json)
            else:
                model = BoostedTrees.from_json(model_json)
            return cls(doc["family"], model.hyper, Standardizer.from_dict(doc["standardizer"]), model)
        net, header = RecurrentNet.loads(blob)
        extra = header["extra"]
        hyper = RnnHyper(**header["hyper"]) if header.get("hyper") else None
        return cls(extra["family"], hyper, Standardizer.from_dict(extra["standardizer"]), net)

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path) -> "ModelBundle":
        with open(path, "rb") as fh:
            return cls.loads(fh.read())


@dataclass
class FitInfo:
    n_fit: int = 0
    n_val: int = 0
    n_after_resampling: int = 0
    minority_share_before: float = 0.0
    minority_share_after: float = 0.0
    synthetic: int = 0
    removed: int = 0


def _digest(w: WindowTensor | None) -> str:
    if w is None:
        return ""
    h = hashlib.sha256(w.values.tobytes())
    h.update(w.labels.tobytes())
    return h.hexdigest()


def split_tail(w: WindowTensor, fraction: float):
    """Chronological split: the last ``fraction`` of samples become the monitor set."""
    n = w.n_samples
    n_val = min(n - 1, max(1, int(round(fraction * n))))
    return w.subset(slice(0, n - n_val)), w.subset(slice(n - n_val, n))


def resample_windows(w: WindowTensor, settings: ResamplingSettings, seed: int):
    flat, _ = flatten_windows(w)
    res = smote_enn(flat, w.labels, ResampleConfig(settings.smote_k, settings.enn_k, settings.ratio, seed))
    n_out = res.X.shape[0]
    dates = np.full(n_out, np.datetime64("NaT"), dtype="datetime64[D]")
    kept_rows = np.flatnonzero(~res.removed)
    orig = kept_rows < w.n_samples
    dates[orig] = w.sample_dates[kept_rows[orig]]
    out = WindowTensor(unflatten(res.X, w.timesteps, w.n_features), dates, res.y, w.names)
    return out, res


def fit_bundle(family: str, hyper, train_w: WindowTensor, resampling: ResamplingSettings | None,
               seed: int, val_fraction: float = 0.2, protected=()) -> tuple[ModelBundle, FitInfo]:
    """Standardize on training rows, optionally SMOTE-ENN the training rows, fit.

    Recurrent families hold out the chronologically last ``val_fraction`` of
    the training windows as the early-stopping monitor set. ``protected``
    tensors (validation/test) are checked to be untouched by resampling.
    """
    if train_w.n_samples < 2:
        raise EmptySplit("training range holds fewer than two windows")
    if np.unique(train_w.labels).size < 2:
        raise SingleClassTraining("training windows contain a single class")
    info = FitInfo()
    if family in RECURRENT:
        fit_w, val_w = split_tail(train_w, val_fraction)
    else:
        fit_w, val_w = train_w, None
    guard = [(w, _digest(w)) for w in (val_w, *protected) if w is not None]

    std = fit_standardizer(fit_w)
    fit_s = apply_standardizer(std, fit_w)
    val_s = apply_standardizer(std, val_w) if val_w is not None else None
    info.n_fit, info.n_val = fit_s.n_samples, (val_s.n_samples if val_s is not None else 0)
    info.minority_share_before = float(min(fit_s.labels.mean(), 1 - fit_s.labels.mean()))

    if resampling is not None and resampling.enabled:
        fit_s, res = resample_windows(fit_s, resampling, derive_seed(seed, "resample"))
        info.synthetic = int((res.origin == "synthetic").sum())
        info.removed = int(res.removed.sum())
    info.n_after_resampling = fit_s.n_samples
    share = float(fit_s.labels.mean()) if fit_s.n_samples else 0.0
    info.minority_share_after = min(share, 1.0 - share)

    for w, digest in guard:
        if _digest(w) != digest:
            raise AssertionError("resampling modified a validation or test tensor")

    if family in RECURRENT:
        h = dataclasses.replace(hyper, seed=derive_seed(seed, "init"))
        net = RecurrentNet.from_hyper(fit_s.n_features, h)
        net, hist = train(net, fit_s, val_s, h)
        return ModelBundle(family, h, std, net, hist), info
    flat, _ = flatten_windows(fit_s)
    if family == "forest":
        h = dataclasses.replace(hyper, seed=derive_seed(seed, "forest"))
        return ModelBundle(family, h, std, fit_forest(flat, fit_s.labels, h)), info
    if family == "boost":
        h = dataclasses.replace(hyper, seed=derive_seed(seed, "boost"))
        return ModelBundle(family, h, std, fit_boost(flat, fit_s.labels, h)), info
    raise ValueError(f"unknown family {family!r}")


def evaluate_bundle(bundle: ModelBundle, w: WindowTensor, threshold: float = 0.5):
    p = bundle.predict_proba(w)
    return evaluate(w.labels, p, threshold), p
