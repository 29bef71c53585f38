"""Expanding-window time-series cross-validation folds."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import RangeOutsideData

VALIDATION = "VALIDATION"
TEST = "TEST"


def _d(s) -> np.datetime64:
    return np.datetime64(s, "D")


def _dmy(d: np.datetime64) -> str:
    y, m, day = str(d).split("-")
    return f"{day}-{m}-{y}"


@dataclass(frozen=True)
class Fold:
    name: str
    train_start: np.datetime64
    train_end: np.datetime64
    eval_start: np.datetime64
    eval_end: np.datetime64
    role: str = VALIDATION

    def __post_init__(self):
        for f in ("train_start", "train_end", "eval_start", "eval_end"):
            object.__setattr__(self, f, _d(getattr(self, f)))
        if not self.train_start <= self.train_end < self.eval_start <= self.eval_end:
            raise ValueError(f"fold {self.name}: ranges must be ordered with train before eval")
        if self.role not in (VALIDATION, TEST):
            raise ValueError(f"fold role must be {VALIDATION} or {TEST}")

    @property
    def train_range(self) -> str:
        return f"{_dmy(self.train_start)}----{_dmy(self.train_end)}"

    @property
    def eval_range(self) -> str:
        return f"{_dmy(self.eval_start)}----{_dmy(self.eval_end)}"

    def train_mask(self, dates) -> np.ndarray:
        d = np.asarray(dates, dtype="datetime64[D]")
        return (d >= self.train_start) & (d <= self.train_end)

    def eval_mask(self, dates) -> np.ndarray:
        d = np.asarray(dates, dtype="datetime64[D]")
        return (d >= self.eval_start) & (d <= self.eval_end)

    def to_dict(self) -> dict:
        return {"name": self.name, "train": [str(self.train_start), str(self.train_end)],
                "eval": [str(self.eval_start), str(self.eval_end)], "role": self.role}

    @classmethod
    def from_dict(cls, d: dict) -> "Fold":
        return cls(d["name"], d["train"][0], d["train"][1], d["eval"][0], d["eval"][1], d.get("role", VALIDATION))


@dataclass(frozen=True)
class SplitPlan:
    folds: tuple[Fold, ...]

    def __post_init__(self):
        object.__setattr__(self, "folds", tuple(self.folds))
        if sum(f.role == TEST for f in self.folds) > 1:
            raise ValueError("a split plan has at most one TEST fold")

    @property
    def validation(self) -> tuple[Fold, ...]:
        return tuple(f for f in self.folds if f.role == VALIDATION)

    @property
    def test(self) -> Fold | None:
        return next((f for f in self.folds if f.role == TEST), None)

    def table(self) -> list[tuple[int, str, str, str]]:
        """(K, training period, evaluation period, role) in DD-MM-YYYY form."""
        return [(k, f.train_range, f.eval_range, f.role) for k, f in enumerate(self.folds, start=1)]

    def check_coverage(self, dates) -> None:
        d = np.asarray(dates, dtype="datetime64[D]")
        for f in self.folds:
            if not f.train_mask(d).any() or not f.eval_mask(d).any():
                raise RangeOutsideData(f"fold {f.name} has no data in its train or eval range")


STUDY_PLAN = SplitPlan((
    Fold("K1", "2010-01-01", "2011-12-31", "2012-01-01", "2013-12-31", VALIDATION),
    Fold("K2", "2010-01-01", "2013-12-31", "2014-01-01", "2015-12-31", VALIDATION),
    Fold("K3", "2010-01-01", "2015-12-31", "2016-01-01", "2019-12-31", VALIDATION),
    Fold("K4", "2010-01-01", "2019-12-31", "2020-01-01", "2023-12-31", TEST),
))


def make_split_plan(cfg=None, dates=None) -> SplitPlan:
    """The configured plan (the four standard folds by default), checked against ``dates``."""
    plan = STUDY_PLAN
    spec = getattr(cfg, "plan", cfg)
    if isinstance(spec, SplitPlan):
        plan = spec
    elif isinstance(spec, dict) and spec.get("folds") not in (None, "standard"):
        folds = [Fold.from_dict(f) for f in spec["folds"]]
        if folds and all(f.role == VALIDATION for f in folds):
            last = folds[-1]
            folds[-1] = Fold(last.name, last.train_start, last.train_end, last.eval_start, last.eval_end, TEST)
        plan = SplitPlan(folds)
    if dates is not None:
        plan.check_coverage(dates)
    return plan


def assert_no_leakage(train_dates, eval_dates) -> None:
    tr = np.asarray(train_dates, dtype="datetime64[D]")
    ev = np.asarray(eval_dates, dtype="datetime64[D]")
    if tr.size and ev.size and tr.max() >= ev.min():
        raise AssertionError(f"leakage: training label date {tr.max()} >= evaluation date {ev.min()}")
    if np.intersect1d(tr, ev).size:
        raise AssertionError("leakage: training and evaluation share label dates")
