"""Empirical VaR thresholds and binary crash labels."""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import AlphaOutOfRange, InsufficientData

STUDY_ALPHAS = (0.05, 0.025, 0.01)


@dataclass(frozen=True)
class VarScenario:
    alpha: float
    threshold: float


@dataclass(frozen=True)
class LabelSeries:
    dates: np.ndarray
    labels: np.ndarray
    scenario: VarScenario
    returns: np.ndarray = field(repr=False)
    missing: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not (len(self.dates) == len(self.labels) == len(self.returns) == len(self.missing)):
            raise ValueError("labels, dates and returns must have equal length")

    @property
    def crash_fraction(self) -> float:
        n = int((~self.missing).sum())
        return float(self.labels[~self.missing].sum() / n) if n else math.nan

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("date", "return", "label", "scenario_alpha", "threshold"))
        a, thr = repr(self.scenario.alpha), repr(self.scenario.threshold)
        for d, r, y in zip(self.dates, self.returns, self.labels):
            w.writerow((str(d), "" if np.isnan(r) else repr(float(r)), int(y), a, thr))
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "LabelSeries":
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows:
            raise ValueError("empty label file")
        rets = np.array([float(r["return"]) if r["return"] else np.nan for r in rows])
        scen = VarScenario(float(rows[0]["scenario_alpha"]), float(rows[0]["threshold"]))
        return cls(
            np.array([r["date"] for r in rows], dtype="datetime64[D]"),
            np.array([int(r["label"]) for r in rows], dtype=np.int8),
            scen,
            rets,
            np.isnan(rets),
        )


def var_threshold(returns, alpha: float, method: str = "linear") -> float:
    """Empirical alpha-quantile of the observed returns.

    ``method`` is any ``numpy.quantile`` estimator; the default interpolates
    linearly between order statistics.
    """
    if not 0.0 < alpha < 1.0:
        raise AlphaOutOfRange(f"alpha must lie in (0, 1), got {alpha}")
    r = np.asarray(returns, dtype=float)
    r = r[~np.isnan(r)]
    if r.size * alpha < 1.0 - 1e-9:
        raise InsufficientData(f"need at least {math.ceil(1 / alpha)} returns for alpha={alpha}, have {r.size}")
    thr = float(np.quantile(r, alpha, method=method))
    if thr > 0:
        warnings.warn(f"VaR threshold {thr:.4%} is positive", RuntimeWarning, stacklevel=2)
    return thr


def label_crashes(returns, threshold: float, dates=None, alpha: float = math.nan) -> LabelSeries:
    """label_t = 1 iff r_t < threshold. MISSING returns are labelled 0 and flagged."""
    if not math.isfinite(threshold):
        raise ValueError("threshold must be finite")
    r = np.asarray(returns, dtype=float)
    missing = np.isnan(r)
    labels = np.zeros(r.shape, dtype=np.int8)
    labels[~missing] = r[~missing] < threshold
    if dates is None:
        dates = np.arange(len(r)).astype("datetime64[D]")
    return LabelSeries(np.asarray(dates, dtype="datetime64[D]"), labels, VarScenario(alpha, threshold), r, missing)


def label_by_var(returns, alpha: float, dates=None, fit_mask=None, method: str = "linear") -> LabelSeries:
    """Threshold from ``returns[fit_mask]`` (all returns by default), then label everything."""
    r = np.asarray(returns, dtype=float)
    fit = r if fit_mask is None else r[np.asarray(fit_mask, dtype=bool)]
    thr = var_threshold(fit, alpha, method)
    return label_crashes(r, thr, dates, alpha)
