import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crashwatch.ensembles import (
    BoostedTrees, BoostHyper, ForestHyper, RandomForest, best_split, fit_boost, fit_forest, fit_tree, predict_forest,
)
from crashwatch.ensembles.tree import presort
from crashwatch.errors import SingleClassTraining


def test_two_point_split():
    X = np.array([[0.0, 0.0], [1.0, 1.0]])
    f, thr, _ = best_split(X, (np.array([0.0, 1.0]),), [0, 1], "gini")
    assert (f, thr) == (0, 0.5)


def _gini_oracle(X, y):
    """Exhaustive search: weighted child Gini impurity at every feature midpoint."""
    def imp(lab):
        if not lab:
            return 0.0
        q = sum(lab) / len(lab)
        return 1 - q * q - (1 - q) * (1 - q)
    n = len(y)
    parent = n * imp(list(y))
    best = None
    for f in range(X.shape[1]):
        vals = sorted(set(X[:, f]))
        for lo, hi in zip(vals, vals[1:]):
            t = (lo + hi) / 2
            L = [y[i] for i in range(n) if X[i, f] <= t]
            R = [y[i] for i in range(n) if X[i, f] > t]
            gain = parent - len(L) * imp(L) - len(R) * imp(R)
            if best is None or gain > best[2] + 1e-12:
                best = (f, t, gain)
    return best


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 100_000))
def test_gini_split_bruteforce(seed):
    r = np.random.default_rng(seed)
    X = np.round(r.normal(size=(12, 3)), 1)
    y = r.integers(0, 2, 12).astype(float)
    y[:2] = (0, 1)
    want = _gini_oracle(X, y)
    got = best_split(X, (y,), [0, 1, 2], "gini")
    if want[2] <= 1e-12:
        assert got is None
    else:
        assert got[0] == want[0] and got[1] == pytest.approx(want[1]) and got[2] == pytest.approx(want[2])


def test_newton_leaf_weights():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    g = np.array([-0.5, -0.5, 0.5, 0.5])
    h = np.array([0.25, 0.25, 0.25, 0.25])
    t = fit_tree(X, (g, h), 1, "newton", lam=1.0)
    assert t.feature[0] == 0 and t.threshold[0] == 1.5
    np.testing.assert_allclose(t.predict(X), [1.0 / 1.5, 1.0 / 1.5, -1.0 / 1.5, -1.0 / 1.5])


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_presorted_trees_identical(seed):
    r = np.random.default_rng(seed)
    X = np.round(r.normal(size=(80, 5)), 1)
    g, h = r.normal(size=80), r.random(80) + 0.1
    a = fit_tree(X, (g, h), 4, "newton")
    b = fit_tree(X, (g, h), 4, "newton", sorted_rows=presort(X))
    assert a.to_dict() == b.to_dict()


def test_single_class_guards():
    X = np.zeros((1, 3))
    f = fit_forest(X, [1], ForestHyper(n_estimators=3), allow_single_class=True)
    np.testing.assert_array_equal(f.predict_proba(np.ones((2, 3))), [1.0, 1.0])
    with pytest.raises(SingleClassTraining):
        fit_forest(X, [1])
    with pytest.raises(SingleClassTraining):
        fit_boost(np.zeros((3, 1)), [0, 0, 0])


def test_zero_rounds_is_base_rate():
    y = np.array([1, 0, 0, 0])
    m = fit_boost(np.arange(4.0)[:, None], y, BoostHyper(n_estimators=0))
    np.testing.assert_allclose(m.predict_proba(np.zeros((2, 1))), 0.25)


def test_ensembles_learn_and_roundtrip():
    r = np.random.default_rng(1)
    X = r.normal(size=(300, 6))
    y = (X[:, 2] + 0.3 * X[:, 4] > 0.5).astype(int)
    f = fit_forest(X[:200], y[:200], ForestHyper(n_estimators=30, max_depth=6, seed=2))
    b = fit_boost(X[:200], y[:200], BoostHyper(n_estimators=40, learning_rate=0.3, max_depth=3))
    for m in (f, b):
        acc = ((m.predict_proba(X[200:]) >= 0.5) == y[200:]).mean()
        assert acc > 0.85
    assert all(a >= c - 1e-12 for a, c in zip(b.train_loss, b.train_loss[1:]))
    np.testing.assert_array_equal(RandomForest.from_json(f.to_json()).predict_proba(X), f.predict_proba(X))
    np.testing.assert_array_equal(BoostedTrees.from_json(b.to_json()).predict_proba(X), b.predict_proba(X))
    hard = predict_forest(f, X, "hard")
    assert set(np.unique(hard * 30).round(6)) <= set(float(k) for k in range(31))


def test_forest_seeded():
    r = np.random.default_rng(3)
    X, y = r.normal(size=(50, 4)), r.integers(0, 2, 50)
    a = fit_forest(X, y, ForestHyper(n_estimators=5, seed=7))
    b = fit_forest(X, y, ForestHyper(n_estimators=5, seed=7))
    assert a.to_json() == b.to_json()


def test_monotone_transform_invariance():
    r = np.random.default_rng(6)
    X, y = r.normal(size=(120, 3)), r.integers(0, 2, 120)
    X2 = X.copy()
    X2[:, 1] = np.exp(X2[:, 1]) * 4 - 1
    h = ForestHyper(n_estimators=5, max_depth=4, seed=1)
    np.testing.assert_array_equal(fit_forest(X, y, h).predict_proba(X), fit_forest(X2, y, h).predict_proba(X2))


def test_tiny_learning_rate_stays_at_prior():
    r = np.random.default_rng(7)
    X, y = r.normal(size=(60, 2)), (r.random(60) < 0.3).astype(int)
    m = fit_boost(X, y, BoostHyper(n_estimators=20, learning_rate=1e-9))
    np.testing.assert_allclose(m.predict_proba(X), y.mean(), atol=1e-7)
    f = fit_forest(X, y, ForestHyper(n_estimators=4, seed=2))
    per = np.mean([t.predict(X) for t in f.trees], axis=0)
    np.testing.assert_array_equal(f.predict_proba(X), per)
