"""Technical indicators and the named predictor catalog.

Every indicator is causal: the value at position t only reads inputs at
positions <= t. Warm-up positions of windowed averages are ``nan``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import NonPositivePrice, UnknownSourceColumn
from .market_data import FeaturePanel, PriceSeries

METHODS_LAGS = (5, 10, 15, 20, 22, 50, 200)
ABSTRACT_LAGS = (5, 10, 15, 22, 50, 200)
STUDY_PREDICTOR_COUNT = 213


class Kind(str, enum.Enum):
    RETURN = "return"
    MA = "ma"
    EMA = "ema"
    OPEN_CLOSE_DIFF = "open_close_diff"
    RSI = "rsi"
    MACD = "macd"
    MACD_SIGNAL = "macd_signal"
    MACD_HIST = "macd_hist"


@dataclass(frozen=True)
class LagSet:
    windows: tuple[int, ...] = METHODS_LAGS

    def __post_init__(self):
        w = tuple(int(x) for x in self.windows)
        if any(x < 2 for x in w) or any(b <= a for a, b in zip(w, w[1:])):
            raise ValueError(f"lag windows must be strictly increasing and >= 2: {w}")
        object.__setattr__(self, "windows", w)


@dataclass(frozen=True)
class IndicatorSpec:
    kind: Kind
    source_column: str
    window: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))


def simple_return(close) -> np.ndarray:
    c = np.asarray(close, dtype=float)
    if np.any(c[~np.isnan(c)] <= 0):
        raise NonPositivePrice("returns need strictly positive prices")
    r = np.full(c.shape, np.nan)
    r[1:] = (c[1:] - c[:-1]) / c[:-1]
    return r


def moving_average(x, w: int) -> np.ndarray:
    if w < 1:
        raise ValueError("window must be >= 1")
    x = np.asarray(x, dtype=float)
    y = np.full(x.shape, np.nan)
    if len(x) >= w:
        y[w - 1:] = sliding_window_view(x, w).mean(axis=1)
    return y


def exponential_moving_average(x, w: int) -> np.ndarray:
    """EMA with alpha = 2/(w+1), seeded with the first observation."""
    if w < 1:
        raise ValueError("window must be >= 1")
    x = np.asarray(x, dtype=float)
    y = np.empty_like(x)
    if len(x) == 0:
        return y
    a = 2.0 / (w + 1.0)
    acc = x[0]
    y[0] = acc
    for t in range(1, len(x)):
        acc = a * x[t] + (1.0 - a) * acc
        y[t] = acc
    return y


def rsi(close, period: int = 14) -> np.ndarray:
    """Wilder RSI. The first ``period`` positions are ``nan``.

    A window with no losses scores 100, no gains scores 0, and a flat window
    (neither) scores 50.
    """
    c = np.asarray(close, dtype=float)
    out = np.full(c.shape, np.nan)
    if len(c) <= period:
        return out
    d = np.diff(c)
    gain = np.clip(d, 0.0, None)
    loss = np.clip(-d, 0.0, None)
    avg_g = gain[:period].mean()
    avg_l = loss[:period].mean()
    for t in range(period, len(c)):
        if t > period:
            avg_g = (avg_g * (period - 1) + gain[t - 1]) / period
            avg_l = (avg_l * (period - 1) + loss[t - 1]) / period
        if avg_l == 0.0:
            out[t] = 50.0 if avg_g == 0.0 else 100.0
        else:
            out[t] = 100.0 - 100.0 / (1.0 + avg_g / avg_l)
    return out


def macd(close, fast: int = 12, slow: int = 26, signal: int = 9):
    c = np.asarray(close, dtype=float)
    line = exponential_moving_average(c, fast) - exponential_moving_average(c, slow)
    sig = exponential_moving_average(line, signal)
    return line, sig, line - sig


def open_close_diff(bars) -> np.ndarray:
    """close - open per bar; accepts a PriceSeries or an (open, close) pair."""
    if isinstance(bars, PriceSeries):
        return bars.field("close") - bars.field("open")
    o, c = bars
    return np.asarray(c, dtype=float) - np.asarray(o, dtype=float)


def _instrument_and_field(column: str) -> tuple[str, str]:
    inst, _, fld = column.rpartition(".")
    return (inst, fld) if inst else (column, "")


def _stem(column: str) -> str:
    inst, fld = _instrument_and_field(column)
    return inst if fld in ("adj_close", "close") else column


def _on_observed(src: np.ndarray, fn) -> np.ndarray:
    """Apply fn to the non-missing subsequence and scatter back.

    Gaps from calendar alignment are skipped, so an indicator advances on the
    instrument's own trading days.
    """
    obs = ~np.isnan(src)
    out = np.full(src.shape, np.nan)
    if obs.any():
        out[obs] = fn(src[obs])
    return out


def expand(spec: IndicatorSpec, lags: LagSet) -> list[tuple[str, IndicatorSpec]]:
    """Named single-column specs produced by one catalog entry."""
    stem = _stem(spec.source_column)
    k = spec.kind
    if k in (Kind.MA, Kind.EMA):
        if spec.window is None:
            windows = lags.windows
        elif spec.window in lags.windows:
            windows = (spec.window,)
        else:
            raise ValueError(f"{k.value} window {spec.window} not in lag set {lags.windows}")
        return [(f"{stem}.{k.value}.{w}", IndicatorSpec(k, spec.source_column, w)) for w in windows]
    if k is Kind.RSI:
        period = spec.window or 14
        return [(f"{stem}.rsi.{period}", IndicatorSpec(k, spec.source_column, period))]
    return [(f"{stem}.{k.value}", spec)]


def _compute(panel: FeaturePanel, spec: IndicatorSpec) -> np.ndarray:
    src = panel.column(spec.source_column)
    k = spec.kind
    if k is Kind.RETURN:
        return _on_observed(src, simple_return)
    if k is Kind.MA:
        return _on_observed(src, lambda x: moving_average(x, spec.window))
    if k is Kind.EMA:
        return _on_observed(src, lambda x: exponential_moving_average(x, spec.window))
    if k is Kind.RSI:
        return _on_observed(src, lambda x: rsi(x, spec.window))
    if k in (Kind.MACD, Kind.MACD_SIGNAL, Kind.MACD_HIST):
        part = (Kind.MACD, Kind.MACD_SIGNAL, Kind.MACD_HIST).index(k)
        return _on_observed(src, lambda x: macd(x)[part])
    if k is Kind.OPEN_CLOSE_DIFF:
        inst, _ = _instrument_and_field(spec.source_column)
        return open_close_diff((panel.column(f"{inst}.open"), panel.column(f"{inst}.close")))
    raise ValueError(k)


def build_catalog(panel: FeaturePanel, specs: Sequence[IndicatorSpec], lags: LagSet = LagSet()) -> FeaturePanel:
    for s in specs:
        needed = [s.source_column]
        if s.kind is Kind.OPEN_CLOSE_DIFF:
            inst, _ = _instrument_and_field(s.source_column)
            needed += [f"{inst}.open", f"{inst}.close"]
        for col in needed:
            if col not in panel.names:
                raise UnknownSourceColumn(col)

    names, cols = [], []
    for s in specs:
        for name, single in expand(s, lags):
            names.append(name)
            cols.append(_compute(panel, single))
    vals = np.column_stack(cols) if cols else np.empty((len(panel.dates), 0))
    return FeaturePanel(panel.dates, tuple(names), vals)


def instrument_specs(instrument_id: str, price_field: str = "adj_close") -> list[IndicatorSpec]:
    """The full indicator set for one instrument (20 columns with the default lags)."""
    src = f"{instrument_id}.{price_field}"
    return [
        IndicatorSpec(Kind.RETURN, src),
        IndicatorSpec(Kind.MA, src),
        IndicatorSpec(Kind.EMA, src),
        IndicatorSpec(Kind.OPEN_CLOSE_DIFF, f"{instrument_id}.close"),
        IndicatorSpec(Kind.RSI, src, 14),
        IndicatorSpec(Kind.MACD, src),
        IndicatorSpec(Kind.MACD_SIGNAL, src),
        IndicatorSpec(Kind.MACD_HIST, src),
    ]


def local_volume_specs(instrument_id: str) -> list[IndicatorSpec]:
    """Volume activity columns for the local index (13 columns).

    MA and EMA over the six-value lag list plus volume RSI.
    """
    src = f"{instrument_id}.volume"
    specs = [IndicatorSpec(Kind.MA, src, w) for w in ABSTRACT_LAGS]
    specs += [IndicatorSpec(Kind.EMA, src, w) for w in ABSTRACT_LAGS]
    specs.append(IndicatorSpec(Kind.RSI, src, 14))
    return specs


def default_catalog(local: str, others: Iterable[str]) -> dict[str, list[IndicatorSpec]]:
    """Per-instrument spec lists for one market dataset.

    With one local index and nine global/commodity/currency instruments this
    yields 10 * 20 + 13 = 213 columns.
    """
    out = {local: instrument_specs(local) + local_volume_specs(local)}
    for inst in others:
        out[inst] = instrument_specs(inst)
    return out


def catalog_size(catalog: dict[str, list[IndicatorSpec]], lags: LagSet = LagSet()) -> int:
    return sum(len(expand(s, lags)) for specs in catalog.values() for s in specs)
