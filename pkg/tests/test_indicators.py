import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crashwatch.errors import NonPositivePrice, UnknownSourceColumn
from crashwatch.indicators import (
    STUDY_PREDICTOR_COUNT, IndicatorSpec, Kind, LagSet, build_catalog, catalog_size, default_catalog,
    exponential_moving_average, macd, moving_average, open_close_diff, rsi, simple_return,
)
from crashwatch.market_data import FeaturePanel

others = ["g1", "g2", "g3", "g4", "g5", "g6", "g7", "g8", "g9"]


def test_simple_return():
    r = simple_return([100.0, 110.0, 99.0])
    assert np.isnan(r[0])
    np.testing.assert_allclose(r[1:], [0.1, -0.1], rtol=1e-15)
    with pytest.raises(NonPositivePrice):
        simple_return([1.0, 0.0])


def test_ema_and_ma():
    np.testing.assert_allclose(exponential_moving_average([1.0, 2.0, 3.0], 3), [1.0, 1.5, 2.25])
    ma = moving_average(np.arange(1.0, 6.0), 3)
    assert np.isnan(ma[:2]).all()
    np.testing.assert_allclose(ma[2:], [2.0, 3.0, 4.0])


def _rsi_oracle(c, n):
    d = np.diff(c)
    out = [np.nan] * len(c)
    g = np.mean(np.maximum(d[:n], 0))
    l = np.mean(np.maximum(-d[:n], 0))
    for t in range(n, len(c)):
        if t > n:
            g = (g * (n - 1) + max(d[t - 1], 0)) / n
            l = (l * (n - 1) + max(-d[t - 1], 0)) / n
        out[t] = 50.0 if g == l == 0 else (100.0 if l == 0 else 100 - 100 / (1 + g / l))
    return np.array(out)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_rsi_matches_wilder_oracle(seed):
    c = 100 * np.cumprod(1 + np.random.default_rng(seed).normal(0, 0.02, 60))
    got = rsi(c, 14)
    np.testing.assert_allclose(got, _rsi_oracle(c, 14), atol=1e-10, equal_nan=True)
    assert np.all((got[14:] >= 0) & (got[14:] <= 100))


def test_rsi_edge_values():
    assert rsi(np.arange(1.0, 30.0), 14)[-1] == 100.0
    assert rsi(np.arange(30.0, 1.0, -1), 14)[-1] == 0.0
    assert rsi(np.full(30, 5.0), 14)[-1] == 50.0


def test_macd_ramp():
    c = np.arange(1.0, 301.0)
    line, sig, hist = macd(c)
    # on a unit ramp an EMA lags by (w-1)/2 once warm, so the line tends to (26-12)/2
    assert abs(line[-1] - 7.0) < 1e-6
    assert abs(sig[-1] - 7.0) < 1e-5
    np.testing.assert_allclose(hist, line - sig)


def test_open_close_diff():
    np.testing.assert_allclose(open_close_diff(([1.0, 2.0], [1.5, 1.0])), [0.5, -1.0])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(10, 60))
def test_indicators_are_causal(seed, cut):
    """Values up to t do not change when later inputs change."""
    r = np.random.default_rng(seed)
    c = 100 * np.cumprod(1 + r.normal(0, 0.02, 80))
    c2 = c.copy()
    c2[cut:] *= 1.5
    for fn in (lambda x: moving_average(x, 5), lambda x: exponential_moving_average(x, 10),
               lambda x: rsi(x, 14), lambda x: macd(x)[2], simple_return):
        np.testing.assert_array_equal(fn(c)[:cut], fn(c2)[:cut])


def test_catalog_counts():
    cat = default_catalog("local", others)
    assert catalog_size(cat) == STUDY_PREDICTOR_COUNT == 213
    with pytest.raises(ValueError):
        LagSet((5, 5))


def test_build_catalog_names_and_errors():
    n = 40
    c = 100 + np.arange(n, dtype=float)
    vals = np.column_stack([c - 0.5, c + 1, c - 1, c, c, np.full(n, 1e3)])
    names = tuple(f"x.{f}" for f in ("open", "high", "low", "close", "adj_close", "volume"))
    p = FeaturePanel(np.arange(n).astype("datetime64[D]"), names, vals)
    out = build_catalog(p, [IndicatorSpec(Kind.MA, "x.adj_close"), IndicatorSpec(Kind.OPEN_CLOSE_DIFF, "x.close")],
                        LagSet((5, 10)))
    assert out.names == ("x.ma.5", "x.ma.10", "x.open_close_diff")
    np.testing.assert_allclose(out.column("x.open_close_diff"), 0.5)
    with pytest.raises(UnknownSourceColumn):
        build_catalog(p, [IndicatorSpec(Kind.MA, "y.adj_close")])
