"""Greedy binary decision trees with Gini or second-order (Newton) split gain."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GAIN_TOL = 1e-12


@dataclass
class DecisionTree:
    """Flat node arrays. Leaves have ``feature == -1``.

    ``value`` is the class-1 frequency for Gini trees and the Newton leaf
    weight ``-G / (H + lambda)`` for boosting trees.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def depth(self) -> int:
        best, stack = 0, [(0, 0)]
        while stack:
            node, d = stack.pop()
            best = max(best, d)
            if self.feature[node] >= 0:
                stack += [(self.left[node], d + 1), (self.right[node], d + 1)]
        return best

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by each row; ``x[feature] <= threshold`` goes left."""
        X = np.asarray(X, dtype=float)
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            rows = np.flatnonzero(active)
            nd = node[rows]
            go_left = X[rows, self.feature[nd]] <= self.threshold[nd]
            node[rows] = np.where(go_left, self.left[nd], self.right[nd])
            active[rows] = self.feature[node[rows]] >= 0
        return node

    def predict(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": [float(t) for t in self.threshold],
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": [float(v) for v in self.value],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        return cls(
            np.array(d["feature"], dtype=np.int64),
            np.array(d["threshold"], dtype=float),
            np.array(d["left"], dtype=np.int64),
            np.array(d["right"], dtype=np.int64),
            np.array(d["value"], dtype=float),
        )


def _gini_scores(ys_sorted, n, min_leaf):
    # n * gini(node) = 2 c (n - c) / n for a node of n samples with c positives
    n_l = np.arange(1, n, dtype=float)
    n_r = n - n_l
    cum = np.cumsum(ys_sorted, axis=1)
    c_l = cum[:, :-1]
    c_r = cum[:, -1:] - c_l
    child = 2.0 * c_l * (n_l - c_l) / n_l + 2.0 * c_r * (n_r - c_r) / n_r
    c = cum[:, -1:]
    parent = 2.0 * c * (n - c) / n
    ok = (n_l >= min_leaf) & (n_r >= min_leaf)
    return parent - child, np.broadcast_to(ok, child.shape)


def _newton_scores(gs_sorted, hs_sorted, lam, min_leaf, min_child_weight):
    n = gs_sorted.shape[1]
    G_l = np.cumsum(gs_sorted, axis=1)
    H_l = np.cumsum(hs_sorted, axis=1)
    G, H = G_l[:, -1:].copy(), H_l[:, -1:].copy()
    G_l, H_l = G_l[:, :-1], H_l[:, :-1]
    G_r, H_r = G - G_l, H - H_l
    ok = None
    if min_child_weight > 0:
        ok = (H_l >= min_child_weight) & (H_r >= min_child_weight)
    # 0.5 * (G_l^2 / (H_l + lam) + G_r^2 / (H_r + lam) - G^2 / (H + lam)), with few temporaries
    H_l += lam
    H_r += lam
    np.square(G_l, out=G_l)
    np.square(G_r, out=G_r)
    G_l /= H_l
    G_r /= H_r
    G_l += G_r
    G_l -= G ** 2 / (H + lam)
    G_l *= 0.5
    n_l = np.arange(1, n)
    size_ok = (n_l >= min_leaf) & (n - n_l >= min_leaf)
    ok = np.broadcast_to(size_ok, G_l.shape) if ok is None else ok & size_ok
    return G_l, ok


def split_candidates(X, stats, feats, criterion, lam=1.0, min_leaf=1, min_child_weight=0.0, order=None):
    """Gain for every (feature, midpoint) candidate, feature-major.

    Returns ``(gain, ok, xs)``: gain and ok are len(feats) x (n-1), entry
    (j, i) being the split between the i-th and (i+1)-th sorted values of
    feature ``feats[j]``; xs holds those sorted values (len(feats) x n).
    ``order`` may supply ``(rows, xs)`` already sorted per feature.
    """
    feats = np.asarray(feats)
    if order is None:
        cols = X[:, feats].T
        rows = np.argsort(cols, axis=1, kind="stable")
        xs = np.take_along_axis(cols, rows, axis=1)
    else:
        rows, xs = order
    n = X.shape[0]
    if criterion == "gini":
        gain, ok = _gini_scores(stats[0][rows], n, min_leaf)
    else:
        g, h = stats
        gain, ok = _newton_scores(g[rows], h[rows], lam, min_leaf, min_child_weight)
    ok = ok & (xs[:, :-1] < xs[:, 1:])
    return gain, ok, xs


def best_split(X, stats, feats, criterion, lam=1.0, min_leaf=1, min_child_weight=0.0, order=None):
    """(feature, threshold, gain) of the best split or None.

    Ties resolve to the lowest feature index, then the lowest threshold.
    ``feats`` must be ascending when ``order`` is given.
    """
    if X.shape[0] < 2:
        return None
    if order is None:
        feats = np.sort(np.asarray(feats))
    gain, ok, xs = split_candidates(X, stats, feats, criterion, lam, min_leaf, min_child_weight, order)
    masked = np.where(ok, gain, -np.inf)
    flat = int(np.argmax(masked))
    j, i = divmod(flat, masked.shape[1])
    best = masked[j, i]
    if not np.isfinite(best) or best <= GAIN_TOL:
        return None
    lo, hi = xs[j, i], xs[j, i + 1]
    thr = 0.5 * (lo + hi)
    if not lo <= thr < hi:
        thr = lo
    return int(feats[j]), float(thr), float(best)


def _leaf_value(stats, idx, criterion, lam):
    if criterion == "gini":
        return float(stats[0][idx].mean())
    g, h = stats
    return float(-g[idx].sum() / (h[idx].sum() + lam))


@dataclass(frozen=True)
class Presorted:
    """Stable per-feature row order of X and the sorted values, feature-major."""

    rows: np.ndarray
    values: np.ndarray


def presort(X) -> Presorted:
    """Sort every column once so trees grown on the same rows skip per-node sorting."""
    cols = np.ascontiguousarray(np.asarray(X, dtype=float).T)
    rows = np.argsort(cols, axis=1, kind="stable").astype(np.int32)
    return Presorted(rows, np.take_along_axis(cols, rows, axis=1))


def _node_order(sorted_rows: Presorted, idx, feats):
    # rows of this node in global sorted order, as positions within idx;
    # idx is ascending, so ties keep row order exactly as a stable local sort would
    n = sorted_rows.rows.shape[1]
    pos = np.full(n, -1, dtype=np.int32)
    pos[idx] = np.arange(idx.size, dtype=np.int32)
    if idx.size == n:
        return pos[sorted_rows.rows[feats]], sorted_rows.values[feats]
    local = pos[sorted_rows.rows[feats]]
    keep = local >= 0
    shape = (len(feats), idx.size)
    return local[keep].reshape(shape), sorted_rows.values[feats][keep].reshape(shape)


def _split_order(order, go_left):
    # children inherit the parent's per-feature sort; positions are renumbered within each child
    rows, xs = order
    f = rows.shape[0]
    n_l = int(go_left.sum())
    newpos = np.where(go_left, np.cumsum(go_left) - 1, np.cumsum(~go_left) - 1).astype(np.int32)
    sel = go_left[rows]
    renum = newpos[rows]
    left = (renum[sel].reshape(f, n_l), xs[sel].reshape(f, n_l))
    right = (renum[~sel].reshape(f, -1), xs[~sel].reshape(f, -1))
    return left, right


def fit_tree(X, target, max_depth: int, criterion: str = "gini", max_features: int | None = None,
             rng=None, lam: float = 1.0, min_samples_leaf: int = 1, min_child_weight: float = 0.0,
             sorted_rows=None) -> DecisionTree:
    """Grow a tree greedily.

    ``target`` is the 0/1 label vector for ``criterion="gini"`` or a ``(g, h)``
    pair of per-sample gradients and hessians for ``criterion="newton"``.
    ``max_features`` draws that many candidate features per node from ``rng``.
    ``sorted_rows`` is an optional :func:`presort` of X that saves re-sorting
    at every node.
    """
    if criterion not in ("gini", "newton"):
        raise ValueError(f"unknown criterion {criterion!r}")
    X = np.asarray(X, dtype=float)
    n, F = X.shape
    if n == 0:
        raise ValueError("cannot fit a tree on zero samples")
    if criterion == "gini":
        stats = (np.asarray(target, dtype=float),)
    else:
        stats = tuple(np.asarray(a, dtype=float) for a in target)
    if max_features is not None and max_features < F and rng is None:
        rng = np.random.default_rng(0)

    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(val):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(val)
        return len(feature) - 1

    all_feats = max_features is None or max_features >= F
    root_order = None
    if sorted_rows is not None and all_feats:
        root_order = (sorted_rows.rows, sorted_rows.values)
    stack = [(np.arange(n), 0, new_node(_leaf_value(stats, np.arange(n), criterion, lam)), root_order)]
    while stack:
        idx, depth, node, order = stack.pop()
        if depth >= max_depth or idx.size < 2 * min_samples_leaf:
            continue
        if criterion == "gini":
            frac = value[node]
            if frac == 0.0 or frac == 1.0:
                continue
        if all_feats:
            feats = np.arange(F)
        else:
            feats = np.sort(rng.choice(F, size=max_features, replace=False))
        sub_stats = tuple(s[idx] for s in stats)
        if order is None and sorted_rows is not None:
            order = _node_order(sorted_rows, idx, feats)
        found = best_split(X[idx], sub_stats, feats, criterion, lam, min_samples_leaf, min_child_weight, order)
        if found is None:
            continue
        f, thr, _ = found
        go_left = X[idx, f] <= thr
        li, ri = idx[go_left], idx[~go_left]
        feature[node], threshold[node] = f, thr
        ln = new_node(_leaf_value(stats, li, criterion, lam))
        rn = new_node(_leaf_value(stats, ri, criterion, lam))
        left[node], right[node] = ln, rn
        l_order = r_order = None
        if order is not None and all_feats and depth + 1 < max_depth:
            l_order, r_order = _split_order(order, go_left)
        stack.append((ri, depth + 1, rn, r_order))
        stack.append((li, depth + 1, ln, l_order))

    return DecisionTree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=float),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value, dtype=float),
    )
