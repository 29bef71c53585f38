"""Seeded synthetic data: a planted-signal feature panel and an OHLCV CSV fixture."""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .market_data import FeaturePanel


def business_days(start: str, n: int) -> np.ndarray:
    first = np.busday_offset(np.datetime64(start, "D"), 0, roll="forward")
    return np.busday_offset(first, np.arange(n), roll="forward")


@dataclass(frozen=True)
class PlantedSignal:
    panel: FeaturePanel
    returns: np.ndarray
    crash: np.ndarray
    signal_feature: int
    lag: int


def planted_signal(n_dates: int = 2000, n_features: int = 10, alpha: float = 0.05, lag: int = 2,
                   signal_feature: int = 0, seed: int = 0, start: str = "2010-01-04",
                   margin: float = 1.5) -> PlantedSignal:
    """Features are independent AR(1) series; the day-t return is a crash exactly
    when feature ``signal_feature`` at t - ``lag`` is among its top alpha values.

    Those top values are then raised by ``margin`` so the two classes are
    separated by a gap on the planted feature. Crash returns sit well below
    every normal return, so the empirical VaR threshold at ``alpha`` recovers
    the planted labels exactly.
    """
    if not 1 <= lag:
        raise ValueError("lag must be >= 1")
    rng = np.random.default_rng(seed)
    X = np.empty((n_dates, n_features))
    eps = rng.standard_normal((n_dates, n_features))
    X[0] = eps[0]
    for t in range(1, n_dates):
        X[t] = 0.5 * X[t - 1] + eps[t]

    eligible = np.arange(lag, n_dates)
    n_ret = n_dates - 1  # first return is missing
    k = int(math.floor((n_ret - 1) * alpha)) + 1
    score = X[eligible - lag, signal_feature]
    top = eligible[np.argsort(-score, kind="stable")[:k]]
    crash = np.zeros(n_dates, dtype=bool)
    crash[top] = True
    X[top - lag, signal_feature] += margin

    returns = np.clip(rng.normal(0.0005, 0.008, n_dates), -0.015, None)
    returns[crash] = -0.03 - 0.01 * rng.random(crash.sum())
    returns[0] = np.nan
    crash[0] = False
    names = tuple(f"f{j}" for j in range(n_features))
    panel = FeaturePanel(business_days(start, n_dates), names, X)
    return PlantedSignal(panel, returns, crash, signal_feature, lag)


def planted_plan(dates) -> "SplitPlan":
    """Expanding folds over a planted panel: three validation years after a
    two-year start, then the remaining dates as the test fold."""
    from .experiment.splits import TEST, VALIDATION, Fold, SplitPlan
    d = np.asarray(dates, dtype="datetime64[D]")
    y0 = int(str(d[0])[:4])
    folds = [Fold(f"K{k}", str(d[0]), f"{y0 + k}-12-31", f"{y0 + k + 1}-01-01", f"{y0 + k + 1}-12-31", VALIDATION)
             for k in (1, 2, 3)]
    folds.append(Fold("K4", str(d[0]), f"{y0 + 4}-12-31", f"{y0 + 5}-01-01", str(d[-1]), TEST))
    return SplitPlan(folds)


def planted_market(ps: PlantedSignal, name: str = "planted"):
    """Wrap a planted panel as prepared market data for the experiment runner."""
    from .experiment.pipeline import MarketData
    return MarketData(name, name, ps.panel, ps.returns)


# -- CSV fixture ------------------------------------------------------------

FIXTURE_INSTRUMENTS = {
    "syn": "SYN.csv",   # local index
    "glb": "GLB.csv",   # global index that leads local crashes by one day
    "oil": "OIL.csv",
    "fx": "FX.csv",
}


def _ohlcv(rng, dates, rets, start_price, volume_scale):
    close = start_price * np.cumprod(1.0 + rets)
    prev = np.r_[start_price, close[:-1]]
    open_ = prev * (1.0 + rng.normal(0, 0.002, len(dates)))
    hi = np.maximum(open_, close) * (1.0 + np.abs(rng.normal(0, 0.003, len(dates))))
    lo = np.minimum(open_, close) * (1.0 - np.abs(rng.normal(0, 0.003, len(dates))))
    if volume_scale:
        vol = np.round(volume_scale * np.exp(rng.normal(0, 0.3, len(dates))))
    else:
        vol = np.zeros(len(dates))
    return open_, hi, lo, close, vol


def _write_csv(path, dates, cols, null_rows=()):
    o, h, l, c, v = cols
    lines = ["Date,Open,High,Low,Close,Adj Close,Volume"]
    nulls = set(int(i) for i in null_rows)
    for i, d in enumerate(dates):
        if i in nulls:
            lines.append(f"{d},null,null,null,null,null,null")
        else:
            lines.append(f"{d},{o[i]:.6f},{h[i]:.6f},{l[i]:.6f},{c[i]:.6f},{c[i]:.6f},{int(v[i])}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_fixture(directory, seed: int = 7, start: str = "2009-01-01", end: str = "2023-12-31") -> dict:
    """Write a four-instrument market with a planted one-day-ahead crash signal.

    Local crashes follow large global-index drops on the previous local trading
    day. Each instrument has its own holiday calendar and a few ``null`` rows.
    Returns the experiment config dict (also written as ``experiment.json``).
    """
    os.makedirs(directory, exist_ok=True)
    rng = np.random.default_rng(seed)
    days = np.arange(np.datetime64(start, "D"), np.datetime64(end, "D") + 1)
    days = days[np.is_busday(days)]
    n = len(days)

    shock = rng.random(n) < 0.03
    g_ret = rng.normal(0.0003, 0.008, n)
    g_ret[shock] = -0.03 - 0.02 * rng.random(shock.sum())

    # local calendar: drop ~2% of days as holidays
    local_open = rng.random(n) > 0.02
    local_idx = np.flatnonzero(local_open)
    l_ret = rng.normal(0.0003, 0.007, len(local_idx))
    prev_shock = np.r_[False, shock[local_idx[:-1]]]
    l_ret[prev_shock] -= 0.03 + 0.01 * rng.random(prev_shock.sum())

    files = {}
    specs = {
        "syn": (local_idx, l_ret, 5000.0, 1e8),
        "glb": (np.flatnonzero(rng.random(n) > 0.03), None, 20000.0, 3e8),
        "oil": (np.flatnonzero(rng.random(n) > 0.03), None, 70.0, 5e5),
        "fx": (np.arange(n), None, 14000.0, 0),
    }
    for inst, (idx, rets, p0, vol) in specs.items():
        if inst == "glb":
            # keep every shock day so the signal is visible in the data
            idx = np.union1d(idx, np.flatnonzero(shock))
            rets = g_ret[idx]
        elif rets is None:
            rets = rng.normal(0.0001, 0.006, len(idx))
        cols = _ohlcv(rng, days[idx], rets, p0, vol)
        nulls = rng.choice(np.arange(300, len(idx)), size=3, replace=False)
        if inst == "glb":
            nulls = [i for i in nulls if not shock[idx[i]]]
        path = os.path.join(directory, FIXTURE_INSTRUMENTS[inst])
        _write_csv(path, days[idx], cols, nulls)
        files[inst] = FIXTURE_INSTRUMENTS[inst]

    config = fixture_config(files)
    with open(os.path.join(directory, "experiment.json"), "w") as fh:
        json.dump(config, fh, indent=2)
        fh.write("\n")
    return config


def fixture_config(files=None) -> dict:
    files = files or dict(FIXTURE_INSTRUMENTS)
    return {
        "markets": [{"name": "synthland", "anchor": "syn", "instruments": files}],
        "alphas": [0.05],
        "plan": {"folds": "standard"},
        "models": {
            "rnn": {"neurons": [16], "layers": [1], "learning_rate": [0.01], "max_epochs": 8, "patience": 3},
            "forest": {"n_estimators": [10], "max_depth": [6]},
            "boost": {"n_estimators": [10], "learning_rate": [0.3], "max_depth": [2]},
        },
        "resampling": {"enabled": True, "smote_k": 5, "enn_k": 3, "ratio": 1.0},
        "repetitions": 2,
        "seed": 11,
        "paths": {"data": ".", "out": "out"},
    }


def fixture_dir() -> str:
    return os.path.join(os.path.dirname(__file__), "data", "fixture")
