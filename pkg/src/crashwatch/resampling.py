"""SMOTE oversampling followed by Edited-Nearest-Neighbours cleaning."""
from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import MinorityTooSmall


@dataclass(frozen=True)
class ResampleConfig:
    smote_k: int = 5
    enn_k: int = 3
    target_minority_ratio: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.smote_k < 1:
            raise ValueError("smote_k must be >= 1")
        if self.enn_k < 1 or self.enn_k % 2 == 0:
            raise ValueError("enn_k must be a positive odd integer")
        if self.target_minority_ratio <= 0:
            raise ValueError("target_minority_ratio must be positive")


@dataclass(frozen=True)
class Resampled:
    """Output rows plus a per-row audit trail over the pre-cleaning set.

    ``origin``, ``removed``, ``parent_a``, ``parent_b`` and ``u`` describe every
    row after SMOTE (originals first, then synthetics); ``X``/``y`` hold only
    the rows ENN kept. For synthetic rows, x = X[parent_a] + u * (X[parent_b] - X[parent_a]).
    """

    X: np.ndarray
    y: np.ndarray
    origin: np.ndarray = field(repr=False)
    removed: np.ndarray = field(repr=False)
    parent_a: np.ndarray = field(repr=False)
    parent_b: np.ndarray = field(repr=False)
    u: np.ndarray = field(repr=False)
    smote_k_used: int = 0

    @property
    def flags(self) -> np.ndarray:
        return np.where(self.removed, "removed", self.origin)

    def audit_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("row", "flag", "origin", "parent_a", "parent_b", "u"))
        for i, (flag, org, a, b, u) in enumerate(zip(self.flags, self.origin, self.parent_a, self.parent_b, self.u)):
            w.writerow((i, flag, org, a if a >= 0 else "", b if b >= 0 else "", "" if np.isnan(u) else repr(float(u))))
        return buf.getvalue()


def sq_distances(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    d = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return np.maximum(d, 0.0)


def nearest_neighbors(X: np.ndarray, k: int, chunk: int = 512) -> np.ndarray:
    """Indices of the k nearest other rows of X; equal distances favour the lower index."""
    n = X.shape[0]
    out = np.empty((n, k), dtype=np.int64)
    for s in range(0, n, chunk):
        e = min(n, s + chunk)
        d = sq_distances(X[s:e], X)
        d[np.arange(e - s), np.arange(s, e)] = np.inf
        out[s:e] = np.argsort(d, axis=1, kind="stable")[:, :k]
    return out


def _minority_label(y: np.ndarray) -> int:
    ones = int((y == 1).sum())
    return 1 if ones <= y.size - ones else 0


def _smote(X, y, cfg: ResampleConfig):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).astype(np.int8)
    n = X.shape[0]
    lab = _minority_label(y)
    mins = np.flatnonzero(y == lab)
    n_min, n_maj = mins.size, n - mins.size
    n_new = max(0, int(round(cfg.target_minority_ratio * n_maj)) - n_min)
    k = cfg.smote_k
    if n_new and n_min < 2:
        raise MinorityTooSmall(f"SMOTE needs >= 2 minority samples, got {n_min}")
    if n_new and n_min < k + 1:
        warnings.warn(f"smote_k clamped from {k} to {n_min - 1}", RuntimeWarning, stacklevel=3)
        k = n_min - 1

    parent_a = np.full(n + n_new, -1, dtype=np.int64)
    parent_b = np.full(n + n_new, -1, dtype=np.int64)
    u = np.full(n + n_new, np.nan)
    origin = np.array(["original"] * n + ["synthetic"] * n_new)
    if n_new == 0:
        return X.copy(), y.copy(), origin, parent_a, parent_b, u, k

    rng = np.random.default_rng(cfg.seed)
    base = rng.integers(n_min, size=n_new)
    pick = rng.integers(k, size=n_new)
    gap = rng.random(n_new)
    nbrs = nearest_neighbors(X[mins], k)
    a = mins[base]
    b = mins[nbrs[base, pick]]
    synth = X[a] + gap[:, None] * (X[b] - X[a])

    parent_a[n:], parent_b[n:], u[n:] = a, b, gap
    X_out = np.vstack([X, synth])
    y_out = np.concatenate([y, np.full(n_new, lab, dtype=np.int8)])
    return X_out, y_out, origin, parent_a, parent_b, u, k


def smote(X, y, cfg: ResampleConfig = ResampleConfig()):
    """Append synthetic minority rows until minority/majority reaches the target ratio.

    Original rows come first and are returned unchanged.
    """
    X_out, y_out, *_ = _smote(X, y, cfg)
    return X_out, y_out


def enn_keep_mask(X, y, k: int = 3) -> np.ndarray:
    """True for rows whose k-NN majority label agrees with their own label."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).astype(np.int8)
    if k >= X.shape[0]:
        raise ValueError(f"enn_k={k} must be smaller than the sample count {X.shape[0]}")
    nbrs = nearest_neighbors(X, k)
    votes = y[nbrs].sum(axis=1)
    majority = np.where(2 * votes > k, 1, np.where(2 * votes < k, 0, y))
    return majority == y


def enn(X, y, cfg: ResampleConfig = ResampleConfig()):
    keep = enn_keep_mask(X, y, cfg.enn_k)
    return np.asarray(X)[keep], np.asarray(y)[keep]


def smote_enn(X, y, cfg: ResampleConfig = ResampleConfig()) -> Resampled:
    Xs, ys, origin, pa, pb, u, k = _smote(X, y, cfg)
    keep = enn_keep_mask(Xs, ys, cfg.enn_k)
    return Resampled(Xs[keep], ys[keep], origin, ~keep, pa, pb, u, k)
