"""OHLCV ingestion, calendar alignment, sparsity filtering and KNN imputation.

MISSING cells are represented as ``nan`` throughout.
"""
from __future__ import annotations

import csv
import datetime as dt
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    AllMissingColumn,
    AnchorNotFound,
    DuplicateDate,
    EmptyFile,
    MalformedHeader,
)

HEADER = ("Date", "Open", "High", "Low", "Close", "Adj Close", "Volume")
FIELDS = ("open", "high", "low", "close", "adj_close", "volume")
_MISSING_TOKENS = {"", "null", "nan", "na", "n/a", "none", "-"}


@dataclass(frozen=True)
class OhlcvBar:
    date: dt.date
    open: float = math.nan
    high: float = math.nan
    low: float = math.nan
    close: float = math.nan
    adj_close: float = math.nan
    volume: float = math.nan

    def is_consistent(self) -> bool:
        """Check low <= min(open, close) <= max(open, close) <= high and volume >= 0.

        Fields that are MISSING are skipped rather than failing the check.
        """
        if not math.isnan(self.volume) and self.volume < 0:
            return False
        vals = (self.open, self.high, self.low, self.close)
        if any(math.isnan(v) for v in vals):
            return True
        lo, hi = min(self.open, self.close), max(self.open, self.close)
        return self.low <= lo <= hi <= self.high


@dataclass(frozen=True)
class PriceSeries:
    instrument_id: str
    bars: tuple[OhlcvBar, ...]

    def __post_init__(self):
        object.__setattr__(self, "bars", tuple(self.bars))
        for a, b in zip(self.bars, self.bars[1:]):
            if b.date == a.date:
                raise DuplicateDate(f"{self.instrument_id}: duplicate date {a.date}")
            if b.date < a.date:
                raise ValueError(f"{self.instrument_id}: bars not in date order")

    def __len__(self):
        return len(self.bars)

    @property
    def dates(self) -> np.ndarray:
        return np.array([b.date for b in self.bars], dtype="datetime64[D]")

    def field(self, name: str) -> np.ndarray:
        if name not in FIELDS:
            raise KeyError(name)
        return np.array([getattr(b, name) for b in self.bars], dtype=float)


@dataclass(frozen=True)
class FeaturePanel:
    """Date-indexed matrix of named numeric columns; ``nan`` marks MISSING."""

    dates: np.ndarray
    names: tuple[str, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        dates = np.asarray(self.dates, dtype="datetime64[D]")
        names = tuple(self.names)
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            values = values.reshape(len(dates), len(names))
        if values.shape != (len(dates), len(names)):
            raise ValueError(
                f"values shape {values.shape} != ({len(dates)}, {len(names)})"
            )
        if len(set(names)) != len(names):
            raise ValueError("column names must be unique")
        values.setflags(write=False)
        dates.setflags(write=False)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "values", values)

    @property
    def shape(self):
        return self.values.shape

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.names.index(name)]

    def select(self, names: Sequence[str]) -> "FeaturePanel":
        idx = [self.names.index(n) for n in names]
        return FeaturePanel(self.dates, tuple(names), self.values[:, idx])

    def rows(self, mask_or_index) -> "FeaturePanel":
        return FeaturePanel(self.dates[mask_or_index], self.names, self.values[mask_or_index])

    def missing_mask(self) -> np.ndarray:
        return np.isnan(self.values)

    def reindex(self, dates) -> "FeaturePanel":
        """Left-join this panel onto ``dates``; absent dates become MISSING."""
        dates = np.asarray(dates, dtype="datetime64[D]")
        out = np.full((len(dates), len(self.names)), np.nan)
        pos = np.searchsorted(self.dates, dates)
        pos_c = np.minimum(pos, max(len(self.dates) - 1, 0))
        hit = (pos < len(self.dates)) & (self.dates[pos_c] == dates) if len(self.dates) else np.zeros(len(dates), bool)
        out[hit] = self.values[pos_c[hit]]
        return FeaturePanel(dates, self.names, out)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("date",) + self.names)
        for d, row in zip(self.dates, self.values):
            w.writerow([str(d)] + ["" if np.isnan(v) else repr(float(v)) for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "FeaturePanel":
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        if not header or header[0] != "date":
            raise MalformedHeader("panel CSV must start with a 'date' column")
        dates, rows = [], []
        for rec in reader:
            if not rec:
                continue
            dates.append(rec[0])
            rows.append([float(v) if v != "" else np.nan for v in rec[1:]])
        vals = np.array(rows, dtype=float).reshape(len(rows), len(header) - 1)
        return cls(np.array(dates, dtype="datetime64[D]"), tuple(header[1:]), vals)


def hstack(panels: Iterable[FeaturePanel]) -> FeaturePanel:
    panels = list(panels)
    dates = panels[0].dates
    for p in panels[1:]:
        if not np.array_equal(p.dates, dates):
            raise ValueError("panels must share dates to be stacked")
    names = tuple(n for p in panels for n in p.names)
    return FeaturePanel(dates, names, np.hstack([p.values for p in panels]))


def _to_float(tok: str) -> float:
    tok = tok.strip()
    if tok.lower() in _MISSING_TOKENS:
        return math.nan
    try:
        return float(tok)
    except ValueError:
        return math.nan


def parse_csv(raw_bytes: bytes, instrument_id: str) -> PriceSeries:
    """Parse a ``Date,Open,High,Low,Close,Adj Close,Volume`` export.

    Rows are sorted by date. Unparseable or ``null`` numerics are kept as
    MISSING fields so the imputation step can fill them later.
    """
    text = raw_bytes.decode("utf-8-sig") if isinstance(raw_bytes, (bytes, bytearray)) else raw_bytes
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise EmptyFile(f"{instrument_id}: empty file")
    header = tuple(h.strip() for h in next(csv.reader([lines[0]])))
    if header != HEADER:
        raise MalformedHeader(f"{instrument_id}: expected header {','.join(HEADER)}, got {','.join(header)}")
    if len(lines) == 1:
        raise EmptyFile(f"{instrument_id}: header only, no rows")

    bars = []
    for lineno, rec in enumerate(csv.reader(lines[1:]), start=2):
        if len(rec) != len(HEADER):
            raise ValueError(f"{instrument_id}: line {lineno} has {len(rec)} fields")
        try:
            day = dt.date.fromisoformat(rec[0].strip())
        except ValueError as exc:
            raise ValueError(f"{instrument_id}: line {lineno}: bad date {rec[0]!r}") from exc
        nums = [_to_float(v) for v in rec[1:]]
        bars.append(OhlcvBar(day, *nums))

    bars.sort(key=lambda b: b.date)
    for a, b in zip(bars, bars[1:]):
        if a.date == b.date:
            raise DuplicateDate(f"{instrument_id}: duplicate date {a.date}")
    return PriceSeries(instrument_id, tuple(bars))


def read_csv(path, instrument_id: str) -> PriceSeries:
    with open(path, "rb") as fh:
        return parse_csv(fh.read(), instrument_id)


def series_panel(series: PriceSeries) -> FeaturePanel:
    """One instrument on its own calendar, columns ``<id>.<field>``."""
    names = tuple(f"{series.instrument_id}.{f}" for f in FIELDS)
    vals = np.column_stack([series.field(f) for f in FIELDS]) if len(series) else np.empty((0, len(FIELDS)))
    return FeaturePanel(series.dates, names, vals)


def align_calendars(series_set: Sequence[PriceSeries], anchor: str) -> FeaturePanel:
    """Left-join every series onto the anchor instrument's trading dates."""
    by_id = {s.instrument_id: s for s in series_set}
    if anchor not in by_id:
        raise AnchorNotFound(anchor)
    dates = by_id[anchor].dates
    return hstack(series_panel(s).reindex(dates) for s in series_set)


def missing_fraction(panel: FeaturePanel) -> np.ndarray:
    if panel.shape[0] == 0:
        return np.zeros(panel.shape[1])
    return np.isnan(panel.values).mean(axis=0)


def drop_sparse_columns(panel: FeaturePanel, max_missing_frac: float = 0.20) -> FeaturePanel:
    if not 0.0 <= max_missing_frac <= 1.0:
        raise ValueError("max_missing_frac must lie in [0, 1]")
    keep = missing_fraction(panel) <= max_missing_frac
    return FeaturePanel(panel.dates, tuple(n for n, k in zip(panel.names, keep) if k), panel.values[:, keep])


def trim_warmup(panel: FeaturePanel) -> FeaturePanel:
    """Drop leading rows until every column has produced its first value."""
    obs = ~np.isnan(panel.values)
    if panel.shape[1] == 0 or panel.shape[0] == 0:
        return panel
    if not obs.any(axis=0).all():
        bad = [n for n, o in zip(panel.names, obs.any(axis=0)) if not o]
        raise AllMissingColumn(f"columns never observed: {bad}")
    start = int(obs.argmax(axis=0).max())
    return panel.rows(slice(start, None))


def _zscore(values: np.ndarray):
    mean = np.nanmean(values, axis=0)
    std = np.nanstd(values, axis=0)
    std = np.where((std > 0) & np.isfinite(std), std, 1.0)
    return (values - mean) / std


def knn_impute(panel: FeaturePanel, k: int = 5) -> FeaturePanel:
    """Fill MISSING cells with the mean of that column over the k nearest rows.

    Distance is Euclidean over z-scored columns observed in both rows; rows
    with no shared observed column are never neighbours. Equal distances
    resolve toward the earlier date. A cell with no eligible neighbour falls
    back to its column mean.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    vals = panel.values
    miss = np.isnan(vals)
    if not miss.any():
        return panel
    all_missing = miss.all(axis=0)
    if all_missing.any():
        bad = [n for n, m in zip(panel.names, all_missing) if m]
        raise AllMissingColumn(f"no observed values in {bad}")

    obs = ~miss
    z = np.where(obs, _zscore(vals), 0.0)
    col_mean = np.nanmean(vals, axis=0)
    out = vals.copy()
    for i in np.flatnonzero(miss.any(axis=1)):
        shared = obs & obs[i]
        d2 = np.where(shared, (z - z[i]) ** 2, 0.0).sum(axis=1)
        dist = np.sqrt(d2)
        dist[~shared.any(axis=1)] = np.inf
        dist[i] = np.inf
        for j in np.flatnonzero(miss[i]):
            cand = np.flatnonzero(obs[:, j] & np.isfinite(dist))
            if cand.size == 0:
                out[i, j] = col_mean[j]
                continue
            order = np.argsort(dist[cand], kind="stable")[:k]
            out[i, j] = vals[cand[order], j].mean()
    return FeaturePanel(panel.dates, panel.names, out)
