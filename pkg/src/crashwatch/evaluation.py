"""Confusion-matrix metrics and precision-recall scoring."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch, NoPositives

FIELDS = ("ifar", "hit_rate", "bal_acc", "auc_prc", "tp", "fp", "fn", "tn", "threshold")


class _NotDefined:
    """Marker for a ratio whose denominator is zero."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "NOT_DEFINED"

    __str__ = __repr__

    def __reduce__(self):
        return (_NotDefined, ())


NOT_DEFINED = _NotDefined()


def is_defined(x) -> bool:
    return x is not NOT_DEFINED


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def confusion(y, p, threshold: float = 0.5) -> ConfusionCounts:
    y = np.asarray(y).astype(bool)
    p = np.asarray(p, dtype=float)
    if y.shape != p.shape:
        raise LengthMismatch(f"{y.shape} labels vs {p.shape} scores")
    pred = p >= threshold
    return ConfusionCounts(
        tp=int((pred & y).sum()),
        fp=int((pred & ~y).sum()),
        fn=int((~pred & y).sum()),
        tn=int((~pred & ~y).sum()),
    )


def inverted_far(c: ConfusionCounts):
    if c.fp + c.tn == 0:
        return NOT_DEFINED
    return 1.0 - c.fp / (c.fp + c.tn)


def hit_rate(c: ConfusionCounts):
    """Recall on the crash class."""
    if c.tp + c.fn == 0:
        return NOT_DEFINED
    return c.tp / (c.tp + c.fn)


def balanced_accuracy(c: ConfusionCounts):
    if c.tp + c.fn == 0 or c.tn + c.fp == 0:
        return NOT_DEFINED
    return 0.5 * (c.tp / (c.tp + c.fn) + c.tn / (c.tn + c.fp))


def pr_curve(y, p) -> list[tuple[float, float]]:
    """(recall, precision) at every distinct score, highest score first."""
    y = np.asarray(y).astype(bool)
    p = np.asarray(p, dtype=float)
    if y.shape != p.shape:
        raise LengthMismatch(f"{y.shape} labels vs {p.shape} scores")
    n_pos = int(y.sum())
    if n_pos == 0:
        raise NoPositives("precision-recall needs at least one positive label")
    order = np.argsort(-p, kind="stable")
    ps, ys = p[order], y[order]
    tp = np.cumsum(ys)
    fp = np.cumsum(~ys)
    ends = np.flatnonzero(np.r_[ps[1:] != ps[:-1], True])
    tp, fp = tp[ends], fp[ends]
    return list(zip((tp / n_pos).tolist(), (tp / (tp + fp)).tolist()))


def auc_prc(y, p) -> float:
    """Average precision: sum over thresholds of (R_k - R_{k-1}) * P_k."""
    curve = pr_curve(y, p)
    area, prev = 0.0, 0.0
    for r, prec in curve:
        area += (r - prev) * prec
        prev = r
    return area


@dataclass(frozen=True)
class MetricsReport:
    inverted_false_alarm_rate: object
    hit_rate: object
    balanced_accuracy: object
    auc_prc: object
    counts: ConfusionCounts
    decision_threshold: float = 0.5

    def as_dict(self) -> dict:
        c = self.counts
        return {
            "ifar": self.inverted_false_alarm_rate,
            "hit_rate": self.hit_rate,
            "bal_acc": self.balanced_accuracy,
            "auc_prc": self.auc_prc,
            "tp": c.tp, "fp": c.fp, "fn": c.fn, "tn": c.tn,
            "threshold": self.decision_threshold,
        }

    def csv_values(self) -> list[str]:
        out = []
        for k, v in self.as_dict().items():
            if v is NOT_DEFINED:
                out.append("NOT_DEFINED")
            elif isinstance(v, int):
                out.append(str(v))
            else:
                out.append(repr(float(v)))
        return out

    def to_json(self) -> str:
        d = {k: (None if v is NOT_DEFINED else v) for k, v in self.as_dict().items()}
        return json.dumps(d, sort_keys=False)

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        def val(x):
            if x is None or x == "NOT_DEFINED":
                return NOT_DEFINED
            return float(x)
        return cls(val(d["ifar"]), val(d["hit_rate"]), val(d["bal_acc"]), val(d["auc_prc"]),
                   ConfusionCounts(int(d["tp"]), int(d["fp"]), int(d["fn"]), int(d["tn"])),
                   float(d["threshold"]))


def evaluate(y, p, threshold: float = 0.5) -> MetricsReport:
    c = confusion(y, p, threshold)
    area = auc_prc(y, p) if c.tp + c.fn > 0 else NOT_DEFINED
    return MetricsReport(inverted_far(c), hit_rate(c), balanced_accuracy(c), area, c, threshold)
