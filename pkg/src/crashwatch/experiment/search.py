"""Grid search over the validation folds, scored by mean AUC-PRC."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

from ..errors import CrashwatchError
from ..evaluation import auc_prc, is_defined
from .pipeline import derive_seed, fit_bundle


@dataclass
class GridPoint:
    index: int
    hyper: object
    fold_scores: list = field(default_factory=list)
    error: str | None = None

    @property
    def score(self) -> float:
        vals = [s for s in self.fold_scores if is_defined(s) and math.isfinite(s)]
        if self.error is not None or not vals:
            return -math.inf
        return sum(vals) / len(vals)

    def as_dict(self) -> dict:
        return {"index": self.index, "hyper": asdict(self.hyper), "fold_scores": list(self.fold_scores),
                "score": self.score, "error": self.error}


@dataclass
class SearchResult:
    best: object
    best_index: int
    points: list
    skipped: bool = False


def _fold_score(bundle, eval_w) -> float:
    if eval_w.n_samples == 0 or eval_w.labels.sum() == 0:
        return math.nan
    return auc_prc(eval_w.labels, bundle.predict_proba(eval_w))


def grid_search(family: str, grid: list, folds, resampling=None, seed: int = 0, val_fraction: float = 0.2,
                tag=()) -> SearchResult:
    """Pick the grid point with the highest mean validation AUC-PRC.

    ``folds`` is a sequence of ``(train_windows, eval_windows)`` pairs. A grid
    point whose training raises a library error is recorded and scored
    ``-inf``; ties keep the earliest point in declaration order.
    """
    if not grid:
        raise ValueError("grid must be non-empty")
    if len(grid) == 1:
        return SearchResult(grid[0], 0, [GridPoint(0, grid[0])], skipped=True)
    points = []
    for i, hyper in enumerate(grid):
        gp = GridPoint(i, hyper)
        try:
            for k, (train_w, eval_w) in enumerate(folds):
                s = derive_seed(seed, *tag, "search", i, k)
                bundle, _ = fit_bundle(family, hyper, train_w, resampling, s, val_fraction, protected=(eval_w,))
                gp.fold_scores.append(_fold_score(bundle, eval_w))
        except (CrashwatchError, ValueError, FloatingPointError) as exc:
            gp.error = f"{type(exc).__name__}: {exc}"
        points.append(gp)
    best = 0
    for gp in points[1:]:
        if gp.score > points[best].score:
            best = gp.index
    return SearchResult(grid[best], best, points)
