"""Supervised sequence samples: features from t-T..t-1 predict the label at t."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import _binio
from .errors import DateMismatch, EmptySplit
from .labeling import LabelSeries
from .market_data import FeaturePanel

DEFAULT_TIMESTEPS = 7


@dataclass(frozen=True)
class WindowTensor:
    """N samples x T timesteps x F features; timestep 0 is the oldest (t-T)."""

    values: np.ndarray = field(repr=False)
    sample_dates: np.ndarray
    labels: np.ndarray
    names: tuple[str, ...]

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 3:
            raise ValueError(f"window values must be 3-D, got shape {v.shape}")
        if not (v.shape[0] == len(self.sample_dates) == len(self.labels)):
            raise ValueError("sample count mismatch between values, dates and labels")
        if v.shape[2] != len(self.names):
            raise ValueError("feature count does not match names")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "sample_dates", np.asarray(self.sample_dates, dtype="datetime64[D]"))
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=np.int8))
        object.__setattr__(self, "names", tuple(self.names))

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def timesteps(self) -> int:
        return self.values.shape[1]

    @property
    def n_features(self) -> int:
        return self.values.shape[2]

    def subset(self, idx) -> "WindowTensor":
        return WindowTensor(self.values[idx], self.sample_dates[idx], self.labels[idx], self.names)

    def between(self, start, end) -> "WindowTensor":
        """Samples whose label date lies in [start, end]."""
        d = self.sample_dates
        mask = (d >= np.datetime64(start, "D")) & (d <= np.datetime64(end, "D"))
        return self.subset(mask)

    def dumps(self, extra: dict | None = None) -> bytes:
        n, t, f = self.values.shape
        header = {
            "N": n, "T": t, "F": f,
            "names": list(self.names),
            "dates": [str(d) for d in self.sample_dates],
            "labels": [int(y) for y in self.labels],
        }
        if extra:
            header["extra"] = extra
        return _binio.dumps(header, self.values)

    @classmethod
    def loads(cls, blob: bytes) -> tuple["WindowTensor", dict]:
        header, payload = _binio.loads(blob)
        n, t, f = header["N"], header["T"], header["F"]
        vals = payload.reshape(n, t, f)
        labels = header.get("labels") or [0] * n
        w = cls(vals, np.array(header["dates"], dtype="datetime64[D]"), np.array(labels), tuple(header["names"]))
        return w, header.get("extra", {})


def make_windows(panel: FeaturePanel, labels: LabelSeries, T: int = DEFAULT_TIMESTEPS) -> WindowTensor:
    if T < 1:
        raise ValueError("T must be >= 1")
    if len(panel.dates) != len(labels.dates) or not np.array_equal(panel.dates, labels.dates):
        raise DateMismatch("panel and labels must share the same dates")
    n = len(panel.dates)
    if n <= T:
        return WindowTensor(np.empty((0, T, panel.shape[1])), np.empty(0, "datetime64[D]"), np.empty(0), panel.names)
    complete = ~np.isnan(panel.values).any(axis=1)
    # window for target t covers rows t-T .. t-1
    ok = sliding_window_view(complete, T).all(axis=1)[: n - T]
    targets = np.arange(T, n)[ok]
    if targets.size == 0:
        return WindowTensor(np.empty((0, T, panel.shape[1])), np.empty(0, "datetime64[D]"), np.empty(0), panel.names)
    rows = targets[:, None] - T + np.arange(T)[None, :]
    vals = panel.values[rows]
    return WindowTensor(vals, panel.dates[targets], labels.labels[targets], panel.names)


def flat_names(names, T: int) -> list[str]:
    return [f"{name}@{T - s}" for s in range(T) for name in names]


def flatten_windows(w: WindowTensor) -> tuple[np.ndarray, list[str]]:
    """N x (T*F) matrix ordered timestep-major; column names are ``feature@lag``."""
    n, t, f = w.values.shape
    return w.values.reshape(n, t * f), flat_names(w.names, t)


def unflatten(matrix: np.ndarray, T: int, F: int) -> np.ndarray:
    m = np.asarray(matrix, dtype=float)
    return m.reshape(m.shape[0], T, F)


@dataclass(frozen=True)
class Standardizer:
    names: tuple[str, ...]
    mean: np.ndarray
    std: np.ndarray
    keep: np.ndarray
    dropped: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "names": list(self.names),
            "mean": [float(x) for x in self.mean],
            "std": [float(x) for x in self.std],
            "keep": [bool(x) for x in self.keep],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        keep = np.array(d["keep"], dtype=bool)
        names = tuple(d["names"])
        return cls(names, np.array(d["mean"]), np.array(d["std"]), keep,
                   tuple(n for n, k in zip(names, keep) if not k))


def fit_standardizer(w: WindowTensor, train_index=None) -> Standardizer:
    """Per-feature z-score statistics over the training samples and all timesteps."""
    vals = w.values if train_index is None else w.values[train_index]
    if vals.shape[0] == 0:
        raise EmptySplit("standardizer needs at least one training sample")
    flat = vals.reshape(-1, vals.shape[2])
    mean = flat.mean(axis=0)
    std = flat.std(axis=0)
    keep = std > 1e-12 * np.maximum(1.0, np.abs(mean))
    dropped = tuple(n for n, k in zip(w.names, keep) if not k)
    if dropped:
        warnings.warn(f"dropping zero-variance features: {list(dropped)}", RuntimeWarning, stacklevel=2)
    return Standardizer(w.names, mean, std, keep, dropped)


def apply_standardizer(s: Standardizer, w: WindowTensor) -> WindowTensor:
    if tuple(w.names) != s.names:
        raise ValueError("feature names differ from those the standardizer was fit on")
    vals = (w.values[:, :, s.keep] - s.mean[s.keep]) / s.std[s.keep]
    names = tuple(n for n, k in zip(s.names, s.keep) if k)
    return WindowTensor(vals, w.sample_dates, w.labels, names)
