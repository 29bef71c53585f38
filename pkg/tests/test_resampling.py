import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crashwatch.errors import MinorityTooSmall
from crashwatch.resampling import ResampleConfig, enn_keep_mask, nearest_neighbors, smote, smote_enn


def test_two_point_segment():
    X = np.array([[0.0, 0.0], [1.0, 1.0]] + [[5.0 + i, -5.0] for i in range(6)])
    y = np.array([1, 1] + [0] * 6)
    Xs, ys = smote(X, y, ResampleConfig(smote_k=1, seed=3))
    syn = Xs[8:]
    assert len(syn) == 4 and (ys[8:] == 1).all()
    np.testing.assert_allclose(syn[:, 0], syn[:, 1], atol=1e-15)
    assert ((syn >= 0) & (syn <= 1)).all()
    np.testing.assert_array_equal(Xs[:8], X)


def test_audit_geometry():
    r = np.random.default_rng(0)
    X = np.vstack([r.normal(size=(80, 3)), r.normal(2, 1, size=(12, 3))])
    y = np.r_[np.zeros(80), np.ones(12)].astype(int)
    res = smote_enn(X, y, ResampleConfig(seed=1))
    syn = np.flatnonzero(res.origin == "synthetic")
    full = np.vstack([X, np.zeros((len(syn), 3))])
    kept = np.flatnonzero(~res.removed)
    full[kept] = res.X
    for i in syn:
        if res.removed[i]:
            continue
        a, b, u = res.parent_a[i], res.parent_b[i], res.u[i]
        assert 0 <= u <= 1 and y[a] == 1 and y[b] == 1
        np.testing.assert_allclose(full[i], X[a] + u * (X[b] - X[a]), atol=1e-12)
    assert res.audit_csv().startswith("row,flag,origin")


def test_enn_removes_intruder():
    X = np.array([[0.0], [0.1], [0.2], [0.15], [5.0], [5.1], [5.2], [5.3]])
    y = np.array([1, 1, 1, 0, 0, 0, 0, 0])
    keep = enn_keep_mask(X, y, 3)
    assert not keep[3] and keep[[0, 1, 2, 4, 5, 6, 7]].all()


def test_enn_large_k_removes_minority():
    X = np.random.default_rng(0).normal(size=(100, 2))
    y = np.r_[np.ones(10), np.zeros(90)].astype(int)
    keep = enn_keep_mask(X, y, 99)
    assert not keep[:10].any() and keep[10:].all()
    with pytest.raises(ValueError):
        enn_keep_mask(X, y, 100)


def test_neighbors_bruteforce():
    X = np.random.default_rng(4).normal(size=(30, 3))
    nn = nearest_neighbors(X, 4, chunk=7)
    for i in range(30):
        d = ((X - X[i]) ** 2).sum(1)
        d[i] = np.inf
        np.testing.assert_array_equal(nn[i], np.argsort(d, kind="stable")[:4])


def test_minority_guards():
    X = np.zeros((10, 1))
    with pytest.raises(MinorityTooSmall):
        smote(X, np.r_[1, np.zeros(9)].astype(int))
    X = np.arange(10.0)[:, None]
    with pytest.warns(RuntimeWarning):
        smote(X, np.r_[1, 1, 1, np.zeros(7)].astype(int), ResampleConfig(smote_k=5))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_seeded_determinism(seed):
    r = np.random.default_rng(seed)
    X = r.normal(size=(60, 4))
    y = (r.random(60) < 0.15).astype(int)
    y[:2] = 1
    a = smote_enn(X, y, ResampleConfig(smote_k=1, seed=seed))
    b = smote_enn(X, y, ResampleConfig(smote_k=1, seed=seed))
    np.testing.assert_array_equal(a.X, b.X)
    np.testing.assert_array_equal(a.removed, b.removed)
