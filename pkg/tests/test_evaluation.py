import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crashwatch.errors import LengthMismatch, NoPositives
from crashwatch.evaluation import (
    NOT_DEFINED, ConfusionCounts, MetricsReport, auc_prc, balanced_accuracy, confusion, evaluate, hit_rate,
    inverted_far, pr_curve,
)


def test_perfect_ranking():
    r = evaluate([1, 0, 1, 0], [0.9, 0.8, 0.2, 0.1])
    assert r.counts == ConfusionCounts(1, 1, 1, 1)
    r = evaluate([1, 1, 0, 0], [0.9, 0.8, 0.2, 0.1])
    assert (r.inverted_false_alarm_rate, r.hit_rate, r.balanced_accuracy, r.auc_prc) == (1.0, 1.0, 1.0, 1.0)


def test_count_formulas():
    assert inverted_far(ConfusionCounts(0, 1, 0, 3)) == 0.75
    assert hit_rate(ConfusionCounts(2, 0, 6, 0)) == 0.25
    assert balanced_accuracy(ConfusionCounts(2, 1, 6, 3)) == pytest.approx(0.5 * (0.25 + 0.75))
    assert balanced_accuracy(ConfusionCounts(3, 2, 7, 8)) == pytest.approx(0.5 * (0.3 + 0.8))
    assert hit_rate(ConfusionCounts(0, 1, 0, 1)) is NOT_DEFINED
    assert inverted_far(ConfusionCounts(1, 0, 1, 0)) is NOT_DEFINED


def test_auc_perfectly_wrong():
    # positives ranked last: precision 1/3 at recall .5, 2/4 at recall 1
    assert auc_prc([0, 0, 1, 1], [0.9, 0.8, 0.2, 0.1]) == pytest.approx(0.5 * (1 / 3) + 0.5 * 0.5)
    assert auc_prc([1, 0], [0.5, 0.5]) == 0.5


def test_threshold_boundary_and_errors():
    assert confusion([1], [0.5]).tp == 1
    with pytest.raises(LengthMismatch):
        confusion([1, 0], [0.5])
    with pytest.raises(NoPositives):
        pr_curve([0, 0], [0.1, 0.2])
    assert evaluate([0, 0], [0.1, 0.9]).auc_prc is NOT_DEFINED


def _sweep_oracle(y, p):
    """Average precision from a threshold at every distinct score."""
    n_pos = sum(y)
    area, prev = 0.0, 0.0
    for t in sorted(set(p), reverse=True):
        tp = sum(1 for a, b in zip(y, p) if b >= t and a)
        fp = sum(1 for a, b in zip(y, p) if b >= t and not a)
        rec = tp / n_pos
        area += (rec - prev) * tp / (tp + fp)
        prev = rec
    return area


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 100_000), st.integers(1, 60))
def test_auc_matches_sweep(seed, n):
    r = np.random.default_rng(seed)
    y = r.integers(0, 2, n)
    y[0] = 1
    p = np.round(r.random(n), 1)  # coarse scores force ties
    assert abs(auc_prc(y, p) - _sweep_oracle(list(y), list(p))) < 1e-12


def test_report_roundtrip():
    r = evaluate([0, 0, 1], [0.1, 0.2, 0.3], 0.9)
    back = MetricsReport.from_dict(dict(zip(("ifar", "hit_rate", "bal_acc", "auc_prc", "tp", "fp", "fn", "tn",
                                             "threshold"), r.csv_values())))
    assert back.counts == r.counts and back.hit_rate == r.hit_rate
    doc = json.loads(evaluate([0, 0], [0.1, 0.9]).to_json())
    assert doc["hit_rate"] is None and doc["fp"] == 1


def test_more_examples():
    assert balanced_accuracy(ConfusionCounts(tp=1, fp=1, fn=3, tn=9)) == pytest.approx(0.575)
    assert balanced_accuracy(confusion([1, 0, 0, 0, 0], np.zeros(5))) == 0.5
    assert auc_prc([1, 0], [0.2, 0.8]) == 0.5
    y = np.array([1, 0, 0, 1, 0, 0, 0, 0])
    assert auc_prc(y, np.full(8, 0.3)) == pytest.approx(y.mean())


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_auc_monotone_invariance(seed):
    r = np.random.default_rng(seed)
    y = r.integers(0, 2, 50)
    y[0] = 1
    p = r.random(50)
    assert auc_prc(y, p) == auc_prc(y, np.exp(3 * p) - 7)


def test_random_scorer_near_prevalence():
    r = np.random.default_rng(0)
    y = (r.random(20000) < 0.1).astype(int)
    assert abs(auc_prc(y, r.random(20000)) - y.mean()) < 0.02
